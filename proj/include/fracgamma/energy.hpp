#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fracgamma/detail/compensated_sum.hpp"
#include "fracgamma/error.hpp"
#include "fracgamma/field.hpp"
#include "fracgamma/geometry.hpp"

namespace fracgamma {

enum class KernelKind { AlphaPower, Gagliardo };

/// Singular kernel of a pair energy.
///
/// AlphaPower(alpha, p) weighs |u_i - u_j|^p by d^{-alpha p}; Gagliardo(s, p)
/// by d^{-(N + s p)}. alpha may equal 1 (the Lipschitz endpoint), s may not.
class KernelSpec {
 public:
  static KernelSpec alpha_power(double alpha, double p) {
    detail::require(alpha > 0.0 && alpha <= 1.0, ErrorKind::InvalidKernel,
                    "alpha must lie in (0, 1], got " + std::to_string(alpha));
    return KernelSpec(KernelKind::AlphaPower, alpha, p);
  }

  static KernelSpec gagliardo(double s, double p) {
    detail::require(s > 0.0 && s < 1.0, ErrorKind::InvalidKernel,
                    "s must lie in (0, 1), got " + std::to_string(s));
    return KernelSpec(KernelKind::Gagliardo, s, p);
  }

  KernelKind kind() const noexcept { return kind_; }
  /// alpha for AlphaPower, s for Gagliardo.
  double order() const noexcept { return order_; }
  double p() const noexcept { return p_; }

  double kappa(std::size_t dimension) const noexcept {
    return kind_ == KernelKind::AlphaPower ? order_ * p_
                                           : static_cast<double>(dimension) + order_ * p_;
  }

  KernelSpec with_p(double p) const { return KernelSpec(kind_, order_, p); }

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelSpec(KernelKind kind, double order, double p) : kind_(kind), order_(order), p_(p) {
    detail::require(std::isfinite(p) && p > 1.0, ErrorKind::UnsupportedExponent,
                    "kernel exponent p must exceed 1, got " + std::to_string(p));
  }

  KernelKind kind_;
  double order_;
  double p_;
};

enum class Region { DomainOnly, EnclosedBall };

/// Value of a pair energy stored in log form so that p in the thousands
/// never overflows.
struct EnergyValue {
  double log_sum = -std::numeric_limits<double>::infinity();
  double root_value = 0.0;
  double raw_value = 0.0;  // +inf when exp(log_sum) is not representable

  static EnergyValue from_log(double log_sum, double p) {
    EnergyValue e;
    e.log_sum = log_sum;
    if (log_sum == -std::numeric_limits<double>::infinity()) return e;
    e.root_value = std::exp(log_sum / p);
    e.raw_value = std::exp(log_sum);
    return e;
  }

  bool raw_finite() const noexcept { return std::isfinite(raw_value); }
};

/// Unordered admissible node pairs with their log-geometry, precomputed once
/// per (cloud, region). log_weight carries log(2 w_i w_j) so the table sums
/// over ordered pairs.
class PairTable {
 public:
  struct Pair {
    std::uint32_t i;
    std::uint32_t j;
    double log_weight;
    double log_dist;
  };

  PairTable(const NodeCloud& cloud, Region region) : nodes_(cloud.size()), dim_(cloud.dimension()) {
    if (region == Region::EnclosedBall) {
      detail::require(cloud.has_exterior(), ErrorKind::InvalidArgument,
                      "enclosed-ball region needs exterior nodes");
    }
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (region == Region::EnclosedBall || cloud.role(i) != NodeRole::Exterior) {
        members.push_back(i);
      }
    }
    detail::CompensatedSum mass;
    const double log2 = std::log(2.0);
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const std::size_t i = members[a];
        const std::size_t j = members[b];
        const double d = cloud.distance(i, j);
        pairs_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                          log2 + std::log(cloud.weight(i)) + std::log(cloud.weight(j)),
                          std::log(d)});
        mass.add(2.0 * cloud.weight(i) * cloud.weight(j));
        span_ = std::max(span_, d);
      }
    }
    pair_mass_ = mass.value();
  }

  const std::vector<Pair>& pairs() const noexcept { return pairs_; }
  std::size_t node_count() const noexcept { return nodes_; }
  std::size_t dimension() const noexcept { return dim_; }
  /// Sum of w_i w_j over ordered pairs i != j.
  double pair_mass() const noexcept { return pair_mass_; }
  /// Largest distance between summed nodes.
  double span() const noexcept { return span_; }

 private:
  std::size_t nodes_;
  std::size_t dim_;
  std::vector<Pair> pairs_;
  double pair_mass_ = 0.0;
  double span_ = 0.0;
};

/// Per-node sums stored as values * exp(log_scale).
struct ScaledNodeSums {
  ScalarField values;
  double log_scale = -std::numeric_limits<double>::infinity();

  double true_value(std::size_t i) const { return values[i] * std::exp(log_scale); }
};

namespace detail {

inline double log_abs_diff(const ScalarField& u, std::size_t i, std::size_t j) {
  const double diff = u[i] - u[j];
  return diff == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(diff));
}

/// sum over pairs of coefficient * 2 w_i w_j |u_i-u_j|^exponent d^{-kappa}, routed to
/// both endpoints; `signed_terms` multiplies by sgn(u_i - u_j) for node i and the
/// opposite sign for node j. Pairs with u_i == u_j are skipped.
inline ScaledNodeSums node_sums(const PairTable& table, const ScalarField& u, double exponent,
                                double kappa, bool signed_terms) {
  const auto& pairs = table.pairs();
  std::vector<double> logs(pairs.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& pr = pairs[k];
    const double ld = log_abs_diff(u, pr.i, pr.j);
    logs[k] = ld == -std::numeric_limits<double>::infinity()
                  ? ld
                  : pr.log_weight + exponent * ld - kappa * pr.log_dist;
    top = std::max(top, logs[k]);
  }
  ScaledNodeSums out{ScalarField(table.node_count(), 0.0), top};
  if (top == -std::numeric_limits<double>::infinity()) {
    out.log_scale = 0.0;
    return out;
  }
  std::vector<CompensatedSum> acc(table.node_count());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (logs[k] == -std::numeric_limits<double>::infinity()) continue;
    const auto& pr = pairs[k];
    const double term = std::exp(logs[k] - top);
    const double sign = signed_terms ? (u[pr.i] > u[pr.j] ? 1.0 : -1.0) : 1.0;
    acc[pr.i].add(sign * term);
    acc[pr.j].add(signed_terms ? -sign * term : term);
  }
  for (std::size_t i = 0; i < acc.size(); ++i) out.values[i] = acc[i].value();
  return out;
}

inline double log_pair_sum(const PairTable& table, const ScalarField& u, double p, double kappa) {
  std::vector<double> logs;
  logs.reserve(table.pairs().size());
  for (const auto& pr : table.pairs()) {
    const double ld = log_abs_diff(u, pr.i, pr.j);
    if (ld == -std::numeric_limits<double>::infinity()) continue;
    logs.push_back(pr.log_weight + p * ld - kappa * pr.log_dist);
  }
  return log_sum_exp(logs);
}

inline void require_field(const ScalarField& u, const NodeCloud& cloud, const char* name) {
  require_size(u, cloud.size(), name);
  require_finite(u, name);
}

}  // namespace detail

/// Sum over ordered pairs of w_i w_j |u_i - u_j|^p d_ij^{-kappa}, in log form.
inline EnergyValue pair_sum(const ScalarField& u, const PairTable& table, const KernelSpec& kernel) {
  detail::require_size(u, table.node_count(), "field");
  detail::require_finite(u, "field");
  return EnergyValue::from_log(
      detail::log_pair_sum(table, u, kernel.p(), kernel.kappa(table.dimension())), kernel.p());
}

inline EnergyValue pair_sum(const ScalarField& u, const NodeCloud& cloud, const KernelSpec& kernel,
                            Region region) {
  detail::require_field(u, cloud, "field");
  return pair_sum(u, PairTable(cloud, region), kernel);
}

struct SupQuotient {
  double value = 0.0;
  // Lowest-index maximizing pair (i < j); npos when the node set has < 2 nodes.
  std::size_t i = static_cast<std::size_t>(-1);
  std::size_t j = static_cast<std::size_t>(-1);
};

/// max |u_i - u_j| / d_ij^alpha over Interior nodes, plus Boundary nodes when
/// `closure` is set. Exterior nodes never participate.
inline SupQuotient sup_quotient(const ScalarField& u, const NodeCloud& cloud, double alpha,
                                bool closure) {
  detail::require_field(u, cloud, "field");
  auto admitted = [&](std::size_t i) {
    const NodeRole r = cloud.role(i);
    return r == NodeRole::Interior || (closure && r == NodeRole::Boundary);
  };
  SupQuotient best;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!admitted(i)) continue;
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      if (!admitted(j)) continue;
      const double q = std::abs(u[i] - u[j]) / std::pow(cloud.distance(i, j), alpha);
      if (best.i == static_cast<std::size_t>(-1) || q > best.value) {
        best = {q, i, j};
      }
    }
  }
  return best;
}

/// Gradient of the raw p-th power pair sum with respect to Interior values;
/// fixed (Boundary, Exterior) entries are zero. True gradient is
/// values * exp(log_scale).
inline ScaledNodeSums energy_gradient(const ScalarField& u, const PairTable& table,
                                      const NodeCloud& cloud, const KernelSpec& kernel) {
  detail::require(kernel.p() > 1.0, ErrorKind::UnsupportedExponent, "gradient needs p > 1");
  detail::require_field(u, cloud, "field");
  auto g = detail::node_sums(table, u, kernel.p() - 1.0, kernel.kappa(cloud.dimension()), true);
  g.log_scale += std::log(kernel.p());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Interior) g.values[i] = 0.0;
  }
  return g;
}

inline ScaledNodeSums energy_gradient(const ScalarField& u, const NodeCloud& cloud,
                                      const KernelSpec& kernel, Region region) {
  return energy_gradient(u, PairTable(cloud, region), cloud, kernel);
}

struct ForceSpec {
  ScalarField values;  // read on Interior nodes only
};

namespace detail {

inline void require_zero_outside(const ScalarField& u, const NodeCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Interior && u[i] != 0.0) {
      throw Error(ErrorKind::ConstraintViolation,
                  "field must vanish on boundary and exterior nodes (node " + std::to_string(i) +
                      ")");
    }
  }
}

inline double force_pairing(const ScalarField& u, const NodeCloud& cloud, const ForceSpec& force) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) == NodeRole::Interior) acc.add(cloud.weight(i) * force.values[i] * u[i]);
  }
  return acc.value();
}

}  // namespace detail

/// (1/p) [u]^p over the enclosed ball plus sum_interior w_i f_i u_i.
inline double forced_functional(const ScalarField& u, const NodeCloud& cloud, double s, double p,
                                const ForceSpec& force) {
  detail::require(cloud.has_exterior(), ErrorKind::InvalidArgument,
                  "forced functional needs an enclosed cloud");
  detail::require_field(u, cloud, "field");
  detail::require_field(force.values, cloud, "force");
  detail::require_zero_outside(u, cloud);
  const auto e = pair_sum(u, cloud, KernelSpec::gagliardo(s, p), Region::EnclosedBall);
  return e.raw_value / p + detail::force_pairing(u, cloud, force);
}

/// (sum over non-Exterior nodes of w_i |u_i - v_i|^q)^(1/q).
inline double lp_distance(const ScalarField& u, const ScalarField& v, const NodeCloud& cloud,
                          double q) {
  detail::require_size(u, cloud.size(), "first field");
  detail::require_size(v, cloud.size(), "second field");
  detail::require(q >= 1.0, ErrorKind::UnsupportedExponent, "distance exponent must be >= 1");
  double top = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Exterior) top = std::max(top, std::abs(u[i] - v[i]));
  }
  if (top == 0.0) return 0.0;
  detail::CompensatedSum acc;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) == NodeRole::Exterior) continue;
    acc.add(cloud.weight(i) * std::pow(std::abs(u[i] - v[i]) / top, q));
  }
  return top * std::pow(acc.value(), 1.0 / q);
}

}  // namespace fracgamma
