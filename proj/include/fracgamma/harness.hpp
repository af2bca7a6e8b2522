#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fracgamma/energy.hpp"
#include "fracgamma/error.hpp"
#include "fracgamma/field.hpp"
#include "fracgamma/geometry.hpp"
#include "fracgamma/infinity.hpp"
#include "fracgamma/solver.hpp"

namespace fracgamma {

/// Absolute tolerance every inequality slack must clear.
inline constexpr double kSlackTolerance = 1e-12;

struct SummaryFlag {
  std::string key;
  bool pass = true;
  double margin = 0.0;
};

/// Per-step experiment records. Column names of slack columns start with
/// "slack_" followed by the inequality they measure.
struct GammaReport {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> status;  // solver status per row, "-" when no solve
  std::vector<SummaryFlag> summary;
  std::vector<std::string> warnings;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    detail::require(it != columns.end(), ErrorKind::InvalidArgument, "no report column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  }

  double at(std::size_t row, const std::string& name) const { return rows.at(row)[column(name)]; }

  const SummaryFlag& flag(const std::string& key) const {
    for (const auto& f : summary) {
      if (f.key == key) return f;
    }
    throw Error(ErrorKind::InvalidArgument, "no summary flag " + key);
  }

  bool all_pass() const {
    return std::all_of(summary.begin(), summary.end(), [](const auto& f) { return f.pass; });
  }

  void add_row(std::vector<double> values, std::string row_status = "-") {
    rows.push_back(std::move(values));
    status.push_back(std::move(row_status));
  }
};

// ---------------------------------------------------------------------------
// Seeded field generators.

/// Uniform random values in [-1, 1] on non-Exterior nodes.
inline ScalarField random_field(const NodeCloud& cloud, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ScalarField u(cloud.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Exterior) u[i] = unit(rng);
  }
  return u;
}

/// Sum of 1..max_bumps radial bumps A (1 - r^2/rho^2)^2_+ centred at random
/// Interior nodes, rho = distance to the nearest Boundary node, A in [-1, 1].
/// Vanishes on Boundary and Exterior nodes.
inline ScalarField random_bump_field(const NodeCloud& cloud, std::mt19937_64& rng,
                                     int max_bumps = 3) {
  const auto interior = cloud.indices(NodeRole::Interior);
  const auto boundary = cloud.indices(NodeRole::Boundary);
  detail::require(!interior.empty() && !boundary.empty(), ErrorKind::DegenerateDomain,
                  "bump fields need interior and boundary nodes");
  std::uniform_int_distribution<int> count(1, max_bumps);
  std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  ScalarField u(cloud.size(), 0.0);
  const int n = count(rng);
  for (int b = 0; b < n; ++b) {
    const std::size_t c = interior[pick(rng)];
    const double a = amp(rng);
    double rho = std::numeric_limits<double>::infinity();
    for (std::size_t j : boundary) rho = std::min(rho, cloud.distance(c, j));
    for (std::size_t i : interior) {
      const double r = cloud.distance(c, i) / rho;
      if (r < 1.0) u[i] += a * (1.0 - r * r) * (1.0 - r * r);
    }
  }
  return u;
}

/// Smooth force: sum of three random cosine modes on Interior nodes, zero elsewhere.
inline ForceSpec smooth_force(const NodeCloud& cloud, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t dim = cloud.dimension();
  struct Mode {
    double amplitude;
    std::vector<double> frequency;
    double phase;
  };
  std::vector<Mode> modes;
  for (int m = 0; m < 3; ++m) {
    Mode mode{unit(rng), std::vector<double>(dim), std::numbers::pi * unit(rng)};
    for (auto& w : mode.frequency) w = 2.0 * std::numbers::pi * unit(rng);
    modes.push_back(std::move(mode));
  }
  ForceSpec force{ScalarField(cloud.size(), 0.0)};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Interior) continue;
    double v = 0.0;
    for (const auto& mode : modes) {
      double arg = mode.phase;
      for (std::size_t a = 0; a < dim; ++a) arg += mode.frequency[a] * cloud.coord(i, a);
      v += mode.amplitude * std::cos(arg);
    }
    force.values[i] = v;
  }
  return force;
}

// ---------------------------------------------------------------------------
// Gamma-limsup / liminf checks.

struct LimsupSlack {
  double p;
  double energy_root;  // E_{alpha,p}(u)
  double bound;        // M^{1/p} * sup quotient over the same node set
  double slack;        // bound - energy_root
};

/// Constant recovery sequence u_p = u: E_{alpha,p}(u) <= M^{1/p} [u]_alpha where M
/// is the ordered-pair mass and the sup quotient runs over the same
/// (non-Exterior) nodes as the pair sum.
inline std::vector<LimsupSlack> verify_limsup(const ScalarField& u, const NodeCloud& cloud,
                                              double alpha, const std::vector<double>& p_schedule) {
  const PairTable table(cloud, Region::DomainOnly);
  const double sup = sup_quotient(u, cloud, alpha, true).value;
  std::vector<LimsupSlack> out;
  for (double p : p_schedule) {
    const auto e = pair_sum(u, table, KernelSpec::alpha_power(alpha, p));
    const double bound = std::pow(table.pair_mass(), 1.0 / p) * sup;
    out.push_back({p, e.root_value, bound, bound - e.root_value});
  }
  return out;
}

struct LiminfReport {
  std::vector<double> energy_roots;  // E_{alpha,p}(u_p)
  std::vector<double> distances;     // L^q(u_p, u_limit)
  double limit_sup_quotient = 0.0;   // E_{alpha,inf}(u_limit), interior nodes only
  double tail_min = 0.0;
  double margin = 0.0;  // tail_min - (1 - tol_rel) * limit_sup_quotient
  bool pass = true;
  bool converging = true;
  std::string warning;
};

/// Finite surrogate for the liminf inequality: the minimum of E_{alpha,p}(u_p)
/// over the last third of the schedule must reach (1 - tol_rel) E_{alpha,inf}(u).
inline LiminfReport verify_liminf(const std::vector<ScalarField>& u_sequence,
                                  const std::vector<double>& p_schedule,
                                  const ScalarField& u_limit, const NodeCloud& cloud,
                                  double alpha, double q, double tol_rel = 0.05) {
  detail::require(!u_sequence.empty() && u_sequence.size() == p_schedule.size(),
                  ErrorKind::SizeMismatch, "one field per schedule entry is required");
  const PairTable table(cloud, Region::DomainOnly);
  LiminfReport r;
  for (std::size_t k = 0; k < u_sequence.size(); ++k) {
    r.energy_roots.push_back(
        pair_sum(u_sequence[k], table, KernelSpec::alpha_power(alpha, p_schedule[k])).root_value);
    r.distances.push_back(lp_distance(u_sequence[k], u_limit, cloud, q));
  }
  r.limit_sup_quotient = sup_quotient(u_limit, cloud, alpha, false).value;
  const std::size_t n = u_sequence.size();
  const std::size_t tail = n - std::max<std::size_t>(1, n / 3);
  r.tail_min = *std::min_element(r.energy_roots.begin() + static_cast<std::ptrdiff_t>(tail),
                                 r.energy_roots.end());
  r.margin = r.tail_min - (1.0 - tol_rel) * r.limit_sup_quotient;
  r.pass = r.margin >= -kSlackTolerance;
  const double first = r.distances.front();
  const double last = r.distances.back();
  r.converging = last <= 1e-12 || last <= 0.5 * first;
  if (!r.converging) {
    r.warning = "sequence does not approach the limit in L^q (first distance " +
                std::to_string(first) + ", last " + std::to_string(last) + ")";
  }
  return r;
}

/// Limsup and Hoelder-chain slacks of a fixed field along a p schedule. The
/// chain slack of row k compares exponent p_k with the largest exponent P:
/// M^{1/p_k - 1/P} E_P(u) - E_{p_k}(u).
inline GammaReport verify_gamma(const ScalarField& u, const NodeCloud& cloud, double alpha,
                                const std::vector<double>& p_schedule) {
  detail::require(!p_schedule.empty(), ErrorKind::InvalidArgument, "empty p schedule");
  const PairTable table(cloud, Region::DomainOnly);
  const auto limsup = verify_limsup(u, cloud, alpha, p_schedule);
  const double p_max = *std::max_element(p_schedule.begin(), p_schedule.end());
  const double root_max = pair_sum(u, table, KernelSpec::alpha_power(alpha, p_max)).root_value;

  GammaReport rep;
  rep.columns = {"p", "energy_root", "limsup_bound", "slack_limsup", "slack_holder_chain"};
  double min_limsup = std::numeric_limits<double>::infinity();
  double min_chain = std::numeric_limits<double>::infinity();
  for (const auto& row : limsup) {
    const double chain =
        std::pow(table.pair_mass(), 1.0 / row.p - 1.0 / p_max) * root_max - row.energy_root;
    rep.add_row({row.p, row.energy_root, row.bound, row.slack, chain});
    min_limsup = std::min(min_limsup, row.slack);
    min_chain = std::min(min_chain, chain);
  }
  rep.summary.push_back({"SLACK_LIMSUP", min_limsup >= -kSlackTolerance, min_limsup});
  rep.summary.push_back({"SLACK_HOLDER_CHAIN", min_chain >= -kSlackTolerance, min_chain});
  return rep;
}

// ---------------------------------------------------------------------------
// p -> infinity sweep.

struct PSweepSettings {
  std::vector<double> p_schedule;
  double q = 16.0;
  double sup_gap_tolerance = 0.05;  // relative
  double liminf_tolerance = 0.05;   // relative
  double bisection_tolerance = 1e-13;
  SolveConfig solver;
};

struct PSweepResult {
  GammaReport report;
  std::vector<HomotopyStep> steps;
  ScalarField reference;  // implicit-formula field
};

inline PSweepResult sweep_p(const NodeCloud& cloud, const BoundaryData& data,
                            const PSweepSettings& settings) {
  PSweepResult out;
  out.reference = holder_infinity_solve(cloud, data, settings.bisection_tolerance);
  out.steps = homotopy_sweep(cloud, data.alpha, data.values, settings.p_schedule, settings.solver);
  const double alpha = data.alpha;
  const PairTable table(cloud, Region::DomainOnly);
  const double ref_sup = sup_quotient(out.reference, cloud, alpha, true).value;

  auto& rep = out.report;
  rep.columns = {"p",           "energy_root",  "log_raw_energy",   "lq_distance",
                 "sup_closure", "sup_interior", "slack_limsup",     "iterations",
                 "scaled_grad_norm"};
  double min_slack = std::numeric_limits<double>::infinity();
  std::vector<ScalarField> fields;
  std::vector<double> ps;
  for (const auto& step : out.steps) {
    const auto e = pair_sum(step.field, table, KernelSpec::alpha_power(alpha, step.p));
    const double sup_c = sup_quotient(step.field, cloud, alpha, true).value;
    const double slack = std::pow(table.pair_mass(), 1.0 / step.p) * sup_c - e.root_value;
    min_slack = std::min(min_slack, slack);
    rep.add_row({step.p, e.root_value, e.log_sum,
                 lp_distance(step.field, out.reference, cloud, settings.q), sup_c,
                 sup_quotient(step.field, cloud, alpha, false).value, slack,
                 static_cast<double>(step.report.iterations), step.report.scaled_grad_norm},
                to_string(step.report.status));
    fields.push_back(step.field);
    ps.push_back(step.p);
  }
  if (out.steps.size() < settings.p_schedule.size()) {
    rep.warnings.push_back("sweep aborted after a degenerate solve");
  }

  const std::size_t dcol = rep.column("lq_distance");
  const std::size_t n = rep.rows.size();
  const double first = rep.rows.front()[dcol];
  const double last = rep.rows.back()[dcol];
  rep.summary.push_back({"DIST_DECREASE", last < first || last <= kSlackTolerance, first - last});

  double tail_margin = std::numeric_limits<double>::infinity();
  const std::size_t tail = n - std::max<std::size_t>(1, n / 3);
  for (std::size_t k = std::max<std::size_t>(tail, 1); k < n; ++k) {
    tail_margin = std::min(tail_margin, rep.rows[k - 1][dcol] - rep.rows[k][dcol]);
  }
  if (!std::isfinite(tail_margin)) tail_margin = 0.0;
  rep.summary.push_back({"DIST_TAIL_NONINCREASING", tail_margin >= -kSlackTolerance, tail_margin});

  const double gap = std::abs(rep.rows.back()[rep.column("sup_closure")] - ref_sup);
  const double allowed = settings.sup_gap_tolerance * ref_sup;
  rep.summary.push_back({"SUP_GAP", gap <= allowed + kSlackTolerance, allowed - gap});
  rep.summary.push_back({"SLACK_LIMSUP", min_slack >= -kSlackTolerance, min_slack});

  const auto liminf =
      verify_liminf(fields, ps, out.reference, cloud, alpha, settings.q, settings.liminf_tolerance);
  rep.summary.push_back({"LIMINF", liminf.pass, liminf.margin});
  if (!liminf.converging) rep.warnings.push_back(liminf.warning);
  return out;
}

// ---------------------------------------------------------------------------
// Dirichlet compatibility.

struct CompatibilityResult {
  bool pass = true;
  double margin = 0.0;  // min over competitors of sup(v) - sup(u*)
  std::size_t worst = 0;
  std::optional<ScalarField> counterexample;
};

/// Compares the closure sup quotient of u_star with that of each competitor.
inline CompatibilityResult compatibility_margin(const ScalarField& u_star,
                                                const std::vector<ScalarField>& competitors,
                                                const NodeCloud& cloud, double alpha) {
  const double base = sup_quotient(u_star, cloud, alpha, true).value;
  CompatibilityResult r;
  r.margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < competitors.size(); ++k) {
    const double diff = sup_quotient(competitors[k], cloud, alpha, true).value - base;
    if (diff < r.margin) {
      r.margin = diff;
      r.worst = k;
    }
  }
  if (competitors.empty()) r.margin = 0.0;
  r.pass = r.margin >= -1e-9;
  if (!r.pass) r.counterexample = competitors[r.worst];
  return r;
}

/// Competitors v = u* + lambda b with b a random bump field (vanishing on the
/// boundary) and lambda chosen so that [lambda b]_alpha is a uniform fraction of
/// [u*]_alpha; hence [v]_alpha <= 2 [u*]_alpha.
inline std::vector<ScalarField> boundary_preserving_competitors(const ScalarField& u_star,
                                                                const NodeCloud& cloud,
                                                                double alpha, std::size_t count,
                                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fraction(0.0, 1.0);
  double base = sup_quotient(u_star, cloud, alpha, true).value;
  if (base == 0.0) base = 1.0;
  std::vector<ScalarField> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const ScalarField bump = random_bump_field(cloud, rng);
    const double bump_sup = sup_quotient(bump, cloud, alpha, true).value;
    const double xi = fraction(rng);
    const double lambda = bump_sup > 0.0 ? xi * base / bump_sup : 0.0;
    ScalarField v = u_star;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += lambda * bump[i];
    out.push_back(std::move(v));
  }
  return out;
}

inline CompatibilityResult compatibility_check(const ScalarField& u_star, const NodeCloud& cloud,
                                               double alpha, std::size_t competitors,
                                               std::uint64_t seed) {
  return compatibility_margin(
      u_star, boundary_preserving_competitors(u_star, cloud, alpha, competitors, seed), cloud,
      alpha);
}

// ---------------------------------------------------------------------------
// s decreasing to s_target (forced problems on the enclosed ball).

struct SAboveSettings {
  double s_target = 0.5;
  std::vector<double> s_schedule;  // strictly decreasing, every entry >= s_target
  double p = 2.0;
  double gap_ratio = 0.25;
  double distance_slack = 1e-6;
  SolveConfig solver;
};

struct SAboveResult {
  GammaReport report;
  ScalarField target_field;
  std::vector<ScalarField> fields;
  std::vector<SolveReport> solves;
};

inline SAboveResult sweep_s_above(const NodeCloud& enclosed, const ForceSpec& force,
                                  const SAboveSettings& settings) {
  const auto& sched = settings.s_schedule;
  detail::require(!sched.empty(), ErrorKind::InvalidArgument, "empty s schedule");
  for (std::size_t k = 0; k < sched.size(); ++k) {
    detail::require(sched[k] >= settings.s_target, ErrorKind::InvalidArgument,
                    "s schedule must stay at or above the target");
    detail::require(k == 0 || sched[k] < sched[k - 1], ErrorKind::InvalidArgument,
                    "s schedule must be strictly decreasing");
  }
  const double p = settings.p;
  const double s = settings.s_target;
  SAboveResult out;
  auto [u_target, target_report] = minimize_forced(enclosed, s, p, force, settings.solver);
  out.target_field = u_target;
  const double f_target = forced_functional(u_target, enclosed, s, p, force);

  const PairTable table(enclosed, Region::EnclosedBall);
  const double span = table.span();
  auto& rep = out.report;
  rep.columns = {"s",           "functional",         "functional_gap", "lp_distance",
                 "lp_norm",     "seminorm_root",      "slack_monotone_comparison",
                 "iterations",  "scaled_grad_norm"};
  double min_slack = std::numeric_limits<double>::infinity();
  const ScalarField zero(enclosed.size(), 0.0);
  for (double sj : sched) {
    auto [u, report] = minimize_forced(enclosed, sj, p, force, settings.solver);
    const double fj = forced_functional(u, enclosed, sj, p, force);
    const auto e_j = pair_sum(u, table, KernelSpec::gagliardo(sj, p));
    const auto e_s = pair_sum(u, table, KernelSpec::gagliardo(s, p));
    const double slack = std::pow(span, (sj - s) * p) * e_j.raw_value - e_s.raw_value;
    min_slack = std::min(min_slack, slack);
    rep.add_row({sj, fj, std::abs(fj - f_target), lp_distance(u, u_target, enclosed, p),
                 lp_distance(u, zero, enclosed, p), e_j.root_value, slack,
                 static_cast<double>(report.iterations), report.scaled_grad_norm},
                to_string(report.status));
    out.fields.push_back(std::move(u));
    out.solves.push_back(report);
  }
  if (target_report.status != SolveStatus::Converged) {
    rep.warnings.push_back(std::string("target solve ended with status ") +
                           to_string(target_report.status));
  }
  out.solves.push_back(target_report);

  const std::size_t gcol = rep.column("functional_gap");
  const double g_first = rep.rows.front()[gcol];
  const double g_last = rep.rows.back()[gcol];
  const double g_allowed = settings.gap_ratio * g_first;
  rep.summary.push_back(
      {"GAP_SHRINK", g_last < g_allowed || g_last == 0.0, g_allowed - g_last});

  const std::size_t dcol = rep.column("lp_distance");
  double d_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    d_margin = std::min(d_margin, rep.rows[k - 1][dcol] - rep.rows[k][dcol]);
  }
  if (!std::isfinite(d_margin)) d_margin = 0.0;
  rep.summary.push_back(
      {"DIST_NONINCREASING", d_margin >= -settings.distance_slack, d_margin});
  rep.summary.push_back({"SLACK_MONOTONE_COMPARISON", min_slack >= -kSlackTolerance, min_slack});
  return out;
}

// ---------------------------------------------------------------------------
// s increasing to s_target (free functional on the domain).

struct SBelowSettings {
  double s_target = 0.5;
  std::vector<double> s_schedule;  // strictly increasing, every entry < s_target
  double p = 2.0;
  double gap_ratio = 0.10;
};

/// For each test field records F^{s_j}(u) = R^{s_j p} [u]_{s_j}^p together with
/// the chain slack R^{(s - s_j) p} [u]_s^p - [u]_{s_j}^p. The last row of each
/// field block is the target s itself.
inline GammaReport sweep_s_below(const NodeCloud& cloud, const std::vector<ScalarField>& test_fields,
                                 const SBelowSettings& settings) {
  const auto& sched = settings.s_schedule;
  detail::require(!sched.empty(), ErrorKind::InvalidArgument, "empty s schedule");
  for (std::size_t k = 0; k < sched.size(); ++k) {
    detail::require(sched[k] <= settings.s_target, ErrorKind::InvalidArgument,
                    "s schedule must stay at or below the target");
    detail::require(k == 0 || sched[k] > sched[k - 1], ErrorKind::InvalidArgument,
                    "s schedule must be strictly increasing");
  }
  for (const auto& u : test_fields) {
    detail::require_field(u, cloud, "test field");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      detail::require(cloud.role(i) == NodeRole::Interior || u[i] == 0.0,
                      ErrorKind::ConstraintViolation, "test fields must vanish off the interior");
    }
  }
  const PairTable table(cloud, Region::DomainOnly);
  const double radius = table.span();
  const double p = settings.p;
  const double s = settings.s_target;

  GammaReport rep;
  rep.columns = {"field", "s", "scaled_energy", "raw_energy", "slack_chain"};
  double mono = std::numeric_limits<double>::infinity();
  double gap_margin = std::numeric_limits<double>::infinity();
  double min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < test_fields.size(); ++f) {
    const auto& u = test_fields[f];
    const double raw_s = pair_sum(u, table, KernelSpec::gagliardo(s, p)).raw_value;
    const double scaled_s = std::pow(radius, s * p) * raw_s;
    double prev = -std::numeric_limits<double>::infinity();
    double last = 0.0;
    for (double sj : sched) {
      const double raw = pair_sum(u, table, KernelSpec::gagliardo(sj, p)).raw_value;
      const double scaled = std::pow(radius, sj * p) * raw;
      const double slack = std::pow(radius, (s - sj) * p) * raw_s - raw;
      rep.add_row({static_cast<double>(f), sj, scaled, raw, slack});
      if (std::isfinite(prev)) mono = std::min(mono, scaled - prev);
      min_slack = std::min(min_slack, slack);
      prev = scaled;
      last = scaled;
    }
    rep.add_row({static_cast<double>(f), s, scaled_s, raw_s, 0.0});
    mono = std::min(mono, scaled_s - prev);
    gap_margin = std::min(gap_margin, settings.gap_ratio * scaled_s - (scaled_s - last));
  }
  if (!std::isfinite(mono)) mono = 0.0;
  if (!std::isfinite(gap_margin)) gap_margin = 0.0;
  if (!std::isfinite(min_slack)) min_slack = 0.0;
  rep.summary.push_back({"MONOTONE", mono >= -kSlackTolerance, mono});
  // A zero target value forces a zero gap, which the >= comparison admits.
  rep.summary.push_back({"GAP", gap_margin >= 0.0, gap_margin});
  rep.summary.push_back({"SLACK_CHAIN", min_slack >= -kSlackTolerance, min_slack});
  return rep;
}

}  // namespace fracgamma
