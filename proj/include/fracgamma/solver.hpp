#pragma once

#include <algorithm>
#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "fracgamma/energy.hpp"
#include "fracgamma/error.hpp"
#include "fracgamma/field.hpp"
#include "fracgamma/geometry.hpp"

namespace fracgamma {

struct BacktrackingArmijo {
  double c = 1e-4;
  double shrink = 0.5;
};

struct FixedStep {
  double eta = 1.0;
};

using StepRule = std::variant<BacktrackingArmijo, FixedStep>;

struct TraceEntry {
  std::size_t iteration;
  double objective;  // log of the raw pair sum (Dirichlet) or F_s value (forced)
  double scaled_grad_norm;
  double step;
};

struct SolveConfig {
  std::size_t max_iterations = 200000;
  double grad_tolerance = 1e-8;
  StepRule step_rule = BacktrackingArmijo{};
  double energy_stall_tolerance = 1e-15;
  /// Consecutive stalled iterations before giving up.
  std::size_t stall_window = 200;
  bool precondition = true;
  std::vector<double> homotopy;  // p schedule; empty = single solve
  std::function<void(const TraceEntry&)> trace;

  void validate() const {
    detail::require(grad_tolerance > 0.0 && energy_stall_tolerance > 0.0,
                    ErrorKind::InvalidArgument, "solver tolerances must be positive");
    detail::require(max_iterations > 0, ErrorKind::InvalidArgument,
                    "max_iterations must be positive");
    if (const auto* a = std::get_if<BacktrackingArmijo>(&step_rule)) {
      detail::require(a->c > 0.0 && a->c < 1.0 && a->shrink > 0.0 && a->shrink < 1.0,
                      ErrorKind::InvalidArgument, "Armijo c and shrink must lie in (0, 1)");
    } else {
      detail::require(std::get<FixedStep>(step_rule).eta > 0.0, ErrorKind::InvalidArgument,
                      "fixed step must be positive");
    }
  }
};

enum class SolveStatus { Converged, MaxIterations, Degenerate };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Degenerate: return "degenerate";
  }
  return "?";
}

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  std::size_t iterations = 0;
  EnergyValue final_energy;  // pair sum over the problem's region
  double objective = 0.0;    // raw pair sum (may be +inf) or F_s(u)
  double scaled_grad_norm = std::numeric_limits<double>::infinity();
  double wall_time = 0.0;  // seconds
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Gradient in scaled form together with the magnitude sum used to normalize it.
struct ObjectiveGradient {
  ScalarField grad;       // true gradient = grad * exp(log_scale); zero at fixed nodes
  ScalarField magnitude;  // same scale: sum of |terms| per node
  double log_scale = 0.0;

  double relative_norm() const {
    double g2 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      g2 += grad[i] * grad[i];
      m2 += magnitude[i] * magnitude[i];
    }
    return m2 == 0.0 ? 0.0 : std::sqrt(g2 / m2);
  }
};

inline void zero_fixed(ScalarField& f, const std::vector<bool>& free) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!free[i]) f[i] = 0.0;
  }
}

/// (1/q) * raw pair sum, plus an optional linear term sum_i w_i f_i u_i.
/// q = 1 gives the plain Dirichlet energy; q = p gives F_s.
class PairObjective {
 public:
  PairObjective(const NodeCloud& cloud, Region region, KernelSpec kernel, bool divide_by_p,
                const ForceSpec* force)
      : cloud_(cloud),
        table_(cloud, region),
        kernel_(kernel),
        kappa_(kernel.kappa(cloud.dimension())),
        divide_by_p_(divide_by_p),
        force_(force),
        free_(cloud.size()) {
    for (std::size_t i = 0; i < cloud.size(); ++i) free_[i] = cloud.role(i) == NodeRole::Interior;
  }

  const std::vector<bool>& free() const noexcept { return free_; }
  const PairTable& table() const noexcept { return table_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  bool forced() const noexcept { return force_ != nullptr; }

  EnergyValue energy(const ScalarField& u) const { return pair_sum(u, table_, kernel_); }

  /// Log raw sum (unforced) or the functional value (forced).
  double objective(const ScalarField& u) const {
    const auto e = energy(u);
    if (!forced()) return e.log_sum;
    return e.raw_value / kernel_.p() + force_pairing(u, cloud_, *force_);
  }

  double reported_objective(const ScalarField& u) const {
    const auto e = energy(u);
    if (!forced()) return e.raw_value;
    return e.raw_value / kernel_.p() + force_pairing(u, cloud_, *force_);
  }

  ObjectiveGradient gradient(const ScalarField& u) const {
    const double p = kernel_.p();
    auto signed_sums = node_sums(table_, u, p - 1.0, kappa_, true);
    auto abs_sums = node_sums(table_, u, p - 1.0, kappa_, false);
    // Both share one scale since they come from the same term list.
    double log_scale = signed_sums.log_scale + (divide_by_p_ ? 0.0 : std::log(p));
    ObjectiveGradient out{std::move(signed_sums.values), std::move(abs_sums.values), log_scale};
    if (force_ != nullptr) {
      double top = log_scale;
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (!free_[i]) continue;
        const double wf = std::abs(cloud_.weight(i) * force_->values[i]);
        if (wf > 0.0) top = std::max(top, std::log(wf));
      }
      const double rescale = std::exp(log_scale - top);
      const double inv = std::exp(-top);
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double wf = free_[i] ? cloud_.weight(i) * force_->values[i] : 0.0;
        out.grad[i] = out.grad[i] * rescale + wf * inv;
        out.magnitude[i] = out.magnitude[i] * rescale + std::abs(wf) * inv;
      }
      out.log_scale = top;
    }
    zero_fixed(out.grad, free_);
    zero_fixed(out.magnitude, free_);
    return out;
  }

  /// Diagonal of the Hessian, scaled; pairs with u_i == u_j are skipped.
  ScaledNodeSums hessian_diagonal(const ScalarField& u) const {
    const double p = kernel_.p();
    auto h = node_sums(table_, u, p - 2.0, kappa_, false);
    h.log_scale += std::log(p - 1.0) + (divide_by_p_ ? 0.0 : std::log(p));
    zero_fixed(h.values, free_);
    return h;
  }

  /// sum_j w_i w_j d^{-kappa}: geometry-only fallback preconditioner.
  ScalarField geometric_diagonal() const {
    ScalarField d(cloud_.size(), 0.0);
    for (const auto& pr : table_.pairs()) {
      const double a = std::exp(pr.log_weight - kappa_ * pr.log_dist);
      d[pr.i] += a;
      d[pr.j] += a;
    }
    zero_fixed(d, free_);
    return d;
  }

 private:
  const NodeCloud& cloud_;
  PairTable table_;
  KernelSpec kernel_;
  double kappa_;
  bool divide_by_p_;
  const ForceSpec* force_;
  std::vector<bool> free_;
};

/// Log-magnitude and sign of a dot product of a scaled vector with a direction.
struct SignedLog {
  double sign = 0.0;
  double log_abs = kNegInf;
};

inline SignedLog scaled_dot(const ObjectiveGradient& g, const ScalarField& d) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < d.size(); ++i) acc.add(g.grad[i] * d[i]);
  const double v = acc.value();
  if (v == 0.0) return {};
  return {v > 0.0 ? 1.0 : -1.0, std::log(std::abs(v)) + g.log_scale};
}

/// Descent direction -P^{-1} g in true units on free nodes.
inline ScalarField descent_direction(const PairObjective& obj, const ScalarField& u,
                                     const ObjectiveGradient& g, bool precondition) {
  const auto& free = obj.free();
  ScalarField d(u.size(), 0.0);
  if (precondition) {
    auto h = obj.hessian_diagonal(u);
    double hmax = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) hmax = std::max(hmax, h.values[i]);
    if (hmax > 0.0 && std::isfinite(hmax)) {
      const double floor = 1e-8 * hmax;
      const double ratio_scale = std::exp(g.log_scale - h.log_scale);
      if (std::isfinite(ratio_scale) && ratio_scale > 0.0) {
        for (std::size_t i = 0; i < u.size(); ++i) {
          if (free[i]) d[i] = -g.grad[i] / std::max(h.values[i], floor) * ratio_scale;
        }
        return d;
      }
    }
    // Hessian vanishes (all differences zero): fall back to the geometric diagonal.
    const auto geo = obj.geometric_diagonal();
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (free[i] && geo[i] > 0.0) d[i] = -g.grad[i] / geo[i];
    }
    return d;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (free[i]) d[i] = -g.grad[i];
  }
  return d;
}

inline ScalarField shifted(const ScalarField& u, const ScalarField& d, double t,
                           const std::vector<bool>& free) {
  ScalarField v = u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (free[i]) v[i] = u[i] + t * d[i];
  }
  return v;
}

/// Directional-derivative ratio phi'(t)/phi'(0), phi'(0) < 0. By convexity
/// phi'(t) <= c phi'(0) (ratio >= c) implies the Armijo decrease condition.
inline double slope_ratio(const SignedLog& slope0, const SignedLog& slope_t) {
  if (slope_t.sign == 0.0) return 0.0;
  const double mag = std::exp(std::min(slope_t.log_abs - slope0.log_abs, 700.0));
  return slope_t.sign == slope0.sign ? mag : -mag;
}

inline SolveReport descend(const PairObjective& obj, ScalarField& u, const SolveConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto& free = obj.free();
  SolveReport report;

  auto g = obj.gradient(u);
  double measure = g.relative_norm();
  double value = obj.objective(u);
  std::size_t stalled = 0;
  double t_init = 1.0;
  if (config.trace) config.trace({0, value, measure, 0.0});

  auto finish = [&](SolveStatus status, std::size_t iterations) {
    report.status = status;
    report.iterations = iterations;
    report.final_energy = obj.energy(u);
    report.objective = obj.reported_objective(u);
    report.scaled_grad_norm = measure;
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  };

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    if (measure <= config.grad_tolerance) return finish(SolveStatus::Converged, it);

    const ScalarField d = descent_direction(obj, u, g, config.precondition);
    const SignedLog slope0 = scaled_dot(g, d);
    if (slope0.sign >= 0.0) {
      // No descent available at floating-point resolution.
      return finish(SolveStatus::Degenerate, it);
    }

    double step = 0.0;
    ScalarField next;
    ObjectiveGradient g_next;
    if (const auto* fixed = std::get_if<FixedStep>(&config.step_rule)) {
      step = fixed->eta;
      next = shifted(u, d, step, free);
      g_next = obj.gradient(next);
    } else {
      const auto& rule = std::get<BacktrackingArmijo>(config.step_rule);
      double t = t_init;
      std::size_t shrinks = 0;
      bool accepted = false;
      while (!accepted) {
        next = shifted(u, d, t, free);
        g_next = obj.gradient(next);
        if (slope_ratio(slope0, scaled_dot(g_next, d)) >= rule.c) {
          accepted = true;
          break;
        }
        if (++shrinks >= 60) return finish(SolveStatus::Degenerate, it);
        t *= rule.shrink;
      }
      if (shrinks == 0) {
        // Expand while the slope test still holds.
        for (int grow = 0; grow < 40; ++grow) {
          const double t2 = t / rule.shrink;
          ScalarField trial = shifted(u, d, t2, free);
          auto g_trial = obj.gradient(trial);
          if (slope_ratio(slope0, scaled_dot(g_trial, d)) < rule.c) break;
          t = t2;
          next = std::move(trial);
          g_next = std::move(g_trial);
        }
      }
      step = t;
      t_init = std::min(1.0, t / rule.shrink);
    }

    const double next_value = obj.objective(next);
    double decrease;
    if (obj.forced()) {
      decrease = (value - next_value) / std::max(std::abs(value), 1e-300);
    } else {
      decrease = value == kNegInf ? 0.0 : -std::expm1(next_value - value);
    }
    if (next == u) {
      ++stalled;
    } else {
      stalled = std::abs(decrease) < config.energy_stall_tolerance ? stalled + 1 : 0;
    }
    u = std::move(next);
    g = std::move(g_next);
    value = next_value;
    measure = g.relative_norm();
    if (config.trace) config.trace({it + 1, value, measure, step});
    if (stalled >= config.stall_window) {
      return finish(measure <= config.grad_tolerance ? SolveStatus::Converged
                                                     : SolveStatus::MaxIterations,
                    it + 1);
    }
  }
  return finish(measure <= config.grad_tolerance ? SolveStatus::Converged
                                                 : SolveStatus::MaxIterations,
                config.max_iterations);
}

/// Solves the quadratic (p = 2) problem with kernel weights w_i w_j d^{-kappa}:
/// stationarity sum_j a_ij (u_i - u_j) + rhs_i = 0 on free nodes.
inline ScalarField quadratic_solve(const NodeCloud& cloud, Region region, double kappa,
                                   const ScalarField& fixed_values, const ScalarField* linear) {
  std::vector<std::ptrdiff_t> slot(cloud.size(), -1);
  std::ptrdiff_t n_free = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) == NodeRole::Interior) slot[i] = n_free++;
  }
  ScalarField u = fixed_values;
  if (n_free == 0) return u;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_free, n_free);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_free);
  auto admitted = [&](std::size_t i) {
    return region == Region::EnclosedBall || cloud.role(i) != NodeRole::Exterior;
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (slot[i] < 0) continue;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (j == i || !admitted(j)) continue;
      const double w = cloud.weight(i) * cloud.weight(j) * std::pow(cloud.distance(i, j), -kappa);
      a(slot[i], slot[i]) += w;
      if (slot[j] >= 0) {
        a(slot[i], slot[j]) -= w;
      } else {
        b(slot[i]) += w * fixed_values[j];
      }
    }
    if (linear != nullptr) b(slot[i]) -= (*linear)[i];
  }
  const Eigen::VectorXd x = a.ldlt().solve(b);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (slot[i] >= 0) u[i] = x(slot[i]);
  }
  return u;
}

inline ScalarField boundary_data(const NodeCloud& cloud, const ScalarField& g) {
  require_size(g, cloud.size(), "boundary data");
  ScalarField out(cloud.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) == NodeRole::Interior) continue;
    require(std::isfinite(g[i]), ErrorKind::InvalidField,
            "boundary data is not finite at node " + std::to_string(i));
    out[i] = g[i];
  }
  return out;
}

}  // namespace detail

/// Cold-start guess for the Dirichlet problem: the p = 2 minimizer with the
/// same alpha, equal to g on every non-Interior node.
inline ScalarField harmonic_initial_guess(const NodeCloud& cloud, double alpha,
                                          const ScalarField& g) {
  detail::require_size(g, cloud.size(), "boundary data");
  const auto boundary = cloud.indices(NodeRole::Boundary);
  const bool constant = std::all_of(boundary.begin(), boundary.end(),
                                    [&](std::size_t i) { return g[i] == g[boundary.front()]; });
  if (constant && !boundary.empty()) {
    ScalarField u = detail::boundary_data(cloud, g);
    for (std::size_t i : cloud.indices(NodeRole::Interior)) u[i] = g[boundary.front()];
    return u;
  }
  return detail::quadratic_solve(cloud, Region::DomainOnly, 2.0 * alpha,
                                 detail::boundary_data(cloud, g), nullptr);
}

/// Minimizes the raw AlphaPower pair sum over non-Exterior nodes with Boundary
/// values fixed to g. Non-convergence is reported through the status.
inline std::pair<ScalarField, SolveReport> minimize_dirichlet(
    const NodeCloud& cloud, const KernelSpec& kernel, const ScalarField& g,
    const SolveConfig& config, const std::optional<ScalarField>& initial = std::nullopt) {
  detail::require(kernel.kind() == KernelKind::AlphaPower, ErrorKind::InvalidKernel,
                  "Dirichlet problems use the AlphaPower kernel");
  const ScalarField fixed = detail::boundary_data(cloud, g);
  ScalarField u;
  if (initial) {
    detail::require_field(*initial, cloud, "initial guess");
    u = *initial;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.role(i) != NodeRole::Interior) u[i] = fixed[i];
    }
  } else {
    u = harmonic_initial_guess(cloud, kernel.order(), g);
  }
  detail::PairObjective obj(cloud, Region::DomainOnly, kernel, false, nullptr);
  auto report = detail::descend(obj, u, config);
  return {std::move(u), report};
}

/// Minimizes F_s over fields vanishing on Boundary and Exterior nodes.
inline std::pair<ScalarField, SolveReport> minimize_forced(
    const NodeCloud& cloud, double s, double p, const ForceSpec& force, const SolveConfig& config,
    const std::optional<ScalarField>& initial = std::nullopt) {
  detail::require(cloud.has_exterior(), ErrorKind::InvalidArgument,
                  "forced problems need an enclosed cloud");
  detail::require_field(force.values, cloud, "force");
  const auto kernel = KernelSpec::gagliardo(s, p);
  ScalarField u;
  if (initial) {
    detail::require_field(*initial, cloud, "initial guess");
    u = *initial;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.role(i) != NodeRole::Interior) u[i] = 0.0;
    }
  } else {
    ScalarField linear(cloud.size(), 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.role(i) == NodeRole::Interior) {
        linear[i] = 0.5 * cloud.weight(i) * force.values[i];
      }
    }
    u = detail::quadratic_solve(cloud, Region::EnclosedBall,
                                static_cast<double>(cloud.dimension()) + 2.0 * s,
                                ScalarField(cloud.size(), 0.0), &linear);
  }
  detail::PairObjective obj(cloud, Region::EnclosedBall, kernel, true, &force);
  auto report = detail::descend(obj, u, config);
  return {std::move(u), report};
}

struct HomotopyStep {
  double p;
  ScalarField field;
  SolveReport report;
};

/// Solves the Dirichlet problem along an increasing p schedule, warm-starting
/// each step from the previous minimizer. A Degenerate step ends the sweep.
inline std::vector<HomotopyStep> homotopy_sweep(const NodeCloud& cloud, double alpha,
                                                const ScalarField& g,
                                                const std::vector<double>& p_schedule,
                                                const SolveConfig& config) {
  detail::require(!p_schedule.empty(), ErrorKind::InvalidArgument, "empty p schedule");
  for (std::size_t k = 0; k < p_schedule.size(); ++k) {
    detail::require(p_schedule[k] > 1.0, ErrorKind::UnsupportedExponent,
                    "schedule exponents must exceed 1");
    detail::require(k == 0 || p_schedule[k] > p_schedule[k - 1], ErrorKind::InvalidArgument,
                    "schedule must be strictly increasing");
  }
  std::vector<HomotopyStep> steps;
  std::optional<ScalarField> warm;
  for (double p : p_schedule) {
    auto [u, report] = minimize_dirichlet(cloud, KernelSpec::alpha_power(alpha, p), g, config, warm);
    steps.push_back({p, u, report});
    if (report.status == SolveStatus::Degenerate) break;
    warm = std::move(u);
  }
  return steps;
}

namespace detail {

inline double check_optimality(const PairObjective& obj, const ScalarField& u,
                               std::size_t n_tests, std::uint64_t seed) {
  const auto g = obj.gradient(u);
  double mag = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) mag += g.magnitude[i] * g.magnitude[i];
  mag = std::sqrt(mag);
  if (mag == 0.0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < n_tests; ++k) {
    ScalarField phi(u.size(), 0.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!obj.free()[i]) continue;
      phi[i] = unit(rng);
      norm += phi[i] * phi[i];
    }
    if (norm == 0.0) continue;
    CompensatedSum pairing;
    for (std::size_t i = 0; i < u.size(); ++i) pairing.add(g.grad[i] * phi[i]);
    worst = std::max(worst, std::abs(pairing.value()) / (std::sqrt(norm) * mag));
  }
  return worst;
}

}  // namespace detail

/// Largest normalized weak-form pairing <E'(u), phi> over random test fields
/// phi vanishing on fixed nodes. The pairing is divided by |phi| and by the
/// norm of the per-node absolute term sums, so the result lies in [0, 1].
inline double check_optimality(const ScalarField& u, const NodeCloud& cloud,
                               const KernelSpec& kernel, std::size_t n_tests, std::uint64_t seed) {
  detail::require_field(u, cloud, "field");
  const Region region =
      kernel.kind() == KernelKind::AlphaPower ? Region::DomainOnly : Region::EnclosedBall;
  detail::PairObjective obj(cloud, region, kernel, false, nullptr);
  return detail::check_optimality(obj, u, n_tests, seed);
}

inline double check_optimality(const ScalarField& u, const NodeCloud& cloud, double s, double p,
                               const ForceSpec& force, std::size_t n_tests, std::uint64_t seed) {
  detail::require_field(u, cloud, "field");
  detail::require_field(force.values, cloud, "force");
  detail::PairObjective obj(cloud, Region::EnclosedBall, KernelSpec::gagliardo(s, p), true,
                            &force);
  return detail::check_optimality(obj, u, n_tests, seed);
}

}  // namespace fracgamma
