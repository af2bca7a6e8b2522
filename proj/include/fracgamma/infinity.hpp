#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fracgamma/error.hpp"
#include "fracgamma/field.hpp"
#include "fracgamma/geometry.hpp"

namespace fracgamma {

/// Dirichlet data for the Hölder infinity-Laplacian: g is read on Boundary nodes.
struct BoundaryData {
  ScalarField values;
  double alpha = 1.0;
};

struct RootBracket {
  double lo;
  double hi;
  double tolerance;
};

namespace detail {

inline void require_alpha_closed(double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::InvalidKernel,
          "alpha must lie in (0, 1], got " + std::to_string(alpha));
}

inline void require_interior(const NodeCloud& cloud, std::size_t x) {
  require(x < cloud.size() && cloud.role(x) == NodeRole::Interior, ErrorKind::InvalidArgument,
          "node " + std::to_string(x) + " is not an interior node");
}

inline void validate(const BoundaryData& data, const NodeCloud& cloud) {
  require_size(data.values, cloud.size(), "boundary data");
  require_alpha_closed(data.alpha);
  require(cloud.count(NodeRole::Boundary) >= 2, ErrorKind::DegenerateDomain,
          "need at least two boundary nodes");
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) == NodeRole::Boundary) {
      require(std::isfinite(data.values[i]), ErrorKind::InvalidField,
              "boundary data is not finite at node " + std::to_string(i));
    }
  }
}

}  // namespace detail

/// L^alpha u(x) = sup_y q(y) + inf_y q(y), q(y) = (u(y) - u(x)) / |y - x|^alpha,
/// y ranging over all non-Exterior nodes other than x.
inline double l_operator(const ScalarField& u, const NodeCloud& cloud, double alpha,
                         std::size_t x) {
  detail::require_size(u, cloud.size(), "field");
  detail::require_alpha_closed(alpha);
  detail::require_interior(cloud, x);
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < cloud.size(); ++y) {
    if (y == x || cloud.role(y) == NodeRole::Exterior) continue;
    const double q = (u[y] - u[x]) / std::pow(cloud.distance(x, y), alpha);
    hi = std::max(hi, q);
    lo = std::min(lo, q);
  }
  detail::require(std::isfinite(hi), ErrorKind::DegenerateDomain, "no other node to compare with");
  return hi + lo;
}

/// l_x(a) with sup and inf taken over Boundary nodes only. Strictly decreasing in a.
inline double ell_x(double a, std::size_t x, const BoundaryData& data, const NodeCloud& cloud) {
  detail::require_interior(cloud, x);
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < cloud.size(); ++y) {
    if (cloud.role(y) != NodeRole::Boundary) continue;
    const double q = (data.values[y] - a) / std::pow(cloud.distance(x, y), data.alpha);
    hi = std::max(hi, q);
    lo = std::min(lo, q);
  }
  return hi + lo;
}

/// Bisection for the root of a -> ell_x(a) inside [min g, max g].
inline double solve_ell_root(std::size_t x, const BoundaryData& data, const NodeCloud& cloud,
                             RootBracket bracket) {
  detail::require(bracket.lo <= bracket.hi && bracket.tolerance > 0.0, ErrorKind::InvalidArgument,
                  "invalid root bracket");
  double lo = bracket.lo;
  double hi = bracket.hi;
  for (int it = 0; it < 200 && hi - lo > bracket.tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = ell_x(mid, x, data, cloud);
    if (v > 0.0) {
      lo = mid;
    } else if (v < 0.0) {
      hi = mid;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// u = g on Boundary; at each Interior node the unique root of l_x in
/// [min g, max g]. Exterior entries are left at zero.
inline ScalarField holder_infinity_solve(const NodeCloud& cloud, const BoundaryData& data,
                                         double tolerance) {
  detail::validate(data, cloud);
  detail::require(tolerance > 0.0, ErrorKind::InvalidArgument, "tolerance must be positive");
  double gmin = std::numeric_limits<double>::infinity();
  double gmax = -gmin;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Boundary) continue;
    gmin = std::min(gmin, data.values[i]);
    gmax = std::max(gmax, data.values[i]);
  }
  ScalarField u(cloud.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    switch (cloud.role(i)) {
      case NodeRole::Boundary: u[i] = data.values[i]; break;
      case NodeRole::Interior:
        u[i] = gmin == gmax ? gmin : solve_ell_root(i, data, cloud, {gmin, gmax, tolerance});
        break;
      case NodeRole::Exterior: break;
    }
  }
  return u;
}

struct ResidualReport {
  double max_abs = 0.0;
  std::vector<std::size_t> nodes;  // interior node indices
  std::vector<double> residuals;   // L^alpha u at those nodes
};

inline ResidualReport residual_report(const ScalarField& u, const NodeCloud& cloud, double alpha) {
  ResidualReport report;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Interior) continue;
    const double r = l_operator(u, cloud, alpha, i);
    report.nodes.push_back(i);
    report.residuals.push_back(r);
    report.max_abs = std::max(report.max_abs, std::abs(r));
  }
  return report;
}

}  // namespace fracgamma
