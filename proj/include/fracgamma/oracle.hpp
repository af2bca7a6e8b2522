#pragma once

// Brute-force reference computations used to cross-check the main path.
// Nothing here calls into energy.hpp or solver.hpp: sums are plain double
// loops, minimization is nested golden-section search.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "fracgamma/error.hpp"
#include "fracgamma/field.hpp"
#include "fracgamma/geometry.hpp"

namespace fracgamma::oracle {

inline constexpr std::size_t kMaxFreeNodes = 4;
inline constexpr std::size_t kMaxNodes = 32;

inline void require_small(const NodeCloud& cloud) {
  const std::size_t free = cloud.count(NodeRole::Interior);
  detail::require(free <= kMaxFreeNodes && cloud.size() <= kMaxNodes, ErrorKind::InstanceTooLarge,
                  "oracle instances need <= 4 free nodes and <= 32 nodes (got " +
                      std::to_string(free) + " free, " + std::to_string(cloud.size()) + " total)");
}

/// sum over ordered pairs i != j of non-Exterior nodes (all nodes when
/// include_exterior) of w_i w_j |u_i - u_j|^p / d^kappa.
inline double direct_pair_sum(const ScalarField& u, const NodeCloud& cloud, double p, double kappa,
                              bool include_exterior = false) {
  double total = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!include_exterior && cloud.role(i) == NodeRole::Exterior) continue;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (i == j || (!include_exterior && cloud.role(j) == NodeRole::Exterior)) continue;
      double d2 = 0.0;
      for (std::size_t a = 0; a < cloud.dimension(); ++a) {
        const double diff = cloud.coord(i, a) - cloud.coord(j, a);
        d2 += diff * diff;
      }
      total += cloud.weight(i) * cloud.weight(j) * std::pow(std::abs(u[i] - u[j]), p) /
               std::pow(std::sqrt(d2), kappa);
    }
  }
  return total;
}

/// O(n^2) max of |u_i - u_j| / d^alpha over the admitted roles.
inline double brute_sup_quotient(const ScalarField& u, const NodeCloud& cloud, double alpha,
                                 bool closure) {
  double best = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (i == j) continue;
      const bool ok_i = cloud.role(i) == NodeRole::Interior ||
                        (closure && cloud.role(i) == NodeRole::Boundary);
      const bool ok_j = cloud.role(j) == NodeRole::Interior ||
                        (closure && cloud.role(j) == NodeRole::Boundary);
      if (!ok_i || !ok_j) continue;
      best = std::max(best, std::abs(u[i] - u[j]) / std::pow(cloud.distance(i, j), alpha));
    }
  }
  return best;
}

/// Central differences of f with respect to the listed coordinates.
inline std::vector<double> central_differences(const std::function<double(const ScalarField&)>& f,
                                               const ScalarField& u,
                                               const std::vector<std::size_t>& coords,
                                               double step) {
  std::vector<double> out;
  for (std::size_t i : coords) {
    ScalarField plus = u, minus = u;
    plus[i] += step;
    minus[i] -= step;
    out.push_back((f(plus) - f(minus)) / (2.0 * step));
  }
  return out;
}

namespace detail {

inline double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol,
                         double* argmin) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  *argmin = 0.5 * (a + b);
  return f(*argmin);
}

inline double nested(const std::function<double(const std::vector<double>&)>& f,
                     std::vector<double>& x, std::size_t level, double lo, double hi, double tol) {
  double arg = 0.0;
  if (level + 1 == x.size()) {
    return golden_min(
        [&](double v) {
          x[level] = v;
          return f(x);
        },
        lo, hi, tol, &arg);
  }
  const double value = golden_min(
      [&](double v) {
        x[level] = v;
        return nested(f, x, level + 1, lo, hi, tol);
      },
      lo, hi, tol, &arg);
  x[level] = arg;
  nested(f, x, level + 1, lo, hi, tol);
  return value;
}

}  // namespace detail

/// Nested golden-section minimization of a convex function over [lo, hi]^k.
/// Each level minimizes the partial minimum of the remaining coordinates,
/// which stays convex.
inline std::vector<double> nested_golden_minimize(
    const std::function<double(const std::vector<double>&)>& f, std::size_t k, double lo,
    double hi, double tol) {
  std::vector<double> x(k, 0.5 * (lo + hi));
  if (k == 0) return x;
  detail::nested(f, x, 0, lo, hi, tol);
  return x;
}

/// Brute-force Dirichlet minimizer: boundary values from g, interior values
/// searched in [min g, max g] (the discrete maximum principle bounds them).
inline ScalarField dirichlet_minimizer(const NodeCloud& cloud, double alpha, double p,
                                       const ScalarField& g, double tol = 1e-5) {
  require_small(cloud);
  const auto free = cloud.indices(NodeRole::Interior);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  ScalarField u(cloud.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) == NodeRole::Interior) continue;
    u[i] = g[i];
    if (cloud.role(i) == NodeRole::Boundary) {
      lo = std::min(lo, g[i]);
      hi = std::max(hi, g[i]);
    }
  }
  if (lo == hi) {
    for (std::size_t i : free) u[i] = lo;
    return u;
  }
  auto energy = [&](const std::vector<double>& x) {
    ScalarField v = u;
    for (std::size_t k = 0; k < free.size(); ++k) v[free[k]] = x[k];
    return direct_pair_sum(v, cloud, p, alpha * p);
  };
  const auto x = nested_golden_minimize(energy, free.size(), lo, hi, tol);
  for (std::size_t k = 0; k < free.size(); ++k) u[free[k]] = x[k];
  return u;
}

}  // namespace fracgamma::oracle
