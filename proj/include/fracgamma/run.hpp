#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracgamma/config.hpp"
#include "fracgamma/energy.hpp"
#include "fracgamma/geometry.hpp"
#include "fracgamma/harness.hpp"
#include "fracgamma/infinity.hpp"
#include "fracgamma/io.hpp"
#include "fracgamma/oracle.hpp"
#include "fracgamma/solver.hpp"

namespace fracgamma {

enum ExitCode : int { kExitOk = 0, kExitSolver = 1, kExitFail = 2, kExitConfig = 3 };

namespace detail {

inline std::string tag_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

/// Collects the output tree and the exit status of one run.
class RunContext {
 public:
  RunContext(const RunConfig& config, std::ostream& out, std::ostream& err)
      : config_(config), out_(out), err_(err), dir_(config.output_dir) {
    std::filesystem::create_directories(dir_);
  }

  const RunConfig& config() const { return config_; }
  std::ostream& out() { return out_; }

  void write(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::Io, "cannot write " + (dir_ / name).string());
    f << body;
  }

  void write_cloud(const NodeCloud& cloud) {
    std::ostringstream os;
    io::write_cloud_csv(os, cloud);
    write("cloud.csv", os.str());
  }

  void write_field(const std::string& tag, const NodeCloud& cloud, const ScalarField& u) {
    std::ostringstream os;
    io::write_cloud_csv(os, cloud, &u);
    write("field_" + tag + ".csv", os.str());
  }

  void write_report(const GammaReport& report) {
    std::ostringstream os;
    io::write_report_csv(os, report);
    write("report.csv", os.str());
    io::write_summary(out_, report);
    for (const auto& w : report.warnings) warn(w);
    if (!report.all_pass()) failed_ = true;
  }

  void write_meta() { write("report.meta", serialize(config_)); }

  void warn(const std::string& message) { err_ << "warning: " << message << '\n'; }

  /// Solver settings with a trace sink bound to `<tag>.trace.csv` when enabled.
  SolveConfig solver(const std::string& tag) {
    const auto& s = config_.solver;
    SolveConfig sc;
    sc.max_iterations = s.max_iterations;
    sc.grad_tolerance = s.grad_tolerance;
    sc.energy_stall_tolerance = s.stall_tolerance;
    sc.precondition = s.precondition;
    if (s.step == StepKind::Armijo) {
      sc.step_rule = BacktrackingArmijo{s.armijo_c, s.shrink};
    } else {
      sc.step_rule = FixedStep{s.eta};
    }
    if (s.trace) {
      auto stream = std::make_shared<std::ostringstream>();
      io::write_trace_header(*stream);
      traces_.emplace_back(tag, stream);
      sc.trace = [stream](const TraceEntry& e) { io::write_trace_row(*stream, e); };
    }
    return sc;
  }

  void record(const std::string& what, const SolveReport& r) {
    err_ << what << ": " << to_string(r.status) << " after " << r.iterations
         << " iterations, wall_time=" << r.wall_time << " s\n";
    if (r.status != SolveStatus::Converged) solver_trouble_ = true;
  }

  int finish() {
    for (const auto& [tag, stream] : traces_) write(tag + ".trace.csv", stream->str());
    write_meta();
    if (failed_) return kExitFail;
    if (solver_trouble_) return kExitSolver;
    return kExitOk;
  }

 private:
  const RunConfig& config_;
  std::ostream& out_;
  std::ostream& err_;
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::shared_ptr<std::ostringstream>>> traces_;
  bool failed_ = false;
  bool solver_trouble_ = false;
};

inline ScalarField boundary_field(const RunConfig& c, const NodeCloud& cloud) {
  ScalarField g(cloud.size(), 0.0);
  std::size_t next = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    switch (c.boundary) {
      case BoundaryKind::Linear: {
        double v = c.boundary_offset;
        for (std::size_t a = 0; a < cloud.dimension(); ++a) v += c.boundary_coeffs[a] * cloud.coord(i, a);
        g[i] = v;
        break;
      }
      case BoundaryKind::Constant: g[i] = c.boundary_value; break;
      case BoundaryKind::Values:
        if (cloud.role(i) == NodeRole::Boundary) {
          if (next >= c.boundary_values.size()) {
            throw ConfigError("boundary.values needs one entry per boundary node (" +
                                  std::to_string(cloud.count(NodeRole::Boundary)) + ")",
                              0, "boundary.values");
          }
          g[i] = c.boundary_values[next++];
        }
        break;
    }
  }
  if (c.boundary == BoundaryKind::Values && next != c.boundary_values.size()) {
    throw ConfigError("boundary.values needs one entry per boundary node (" +
                          std::to_string(cloud.count(NodeRole::Boundary)) + ")",
                      0, "boundary.values");
  }
  return g;
}

inline ForceSpec force_field(const RunConfig& c, const NodeCloud& cloud) {
  if (c.force == ForceKind::Smooth) return smooth_force(cloud, c.seed);
  ForceSpec f{ScalarField(cloud.size(), 0.0)};
  if (c.force == ForceKind::Constant) {
    for (std::size_t i : cloud.indices(NodeRole::Interior)) f.values[i] = c.force_value;
  }
  return f;
}

inline ScalarField test_field(const RunConfig& c, const NodeCloud& cloud) {
  switch (c.field) {
    case FieldKind::Constant: {
      ScalarField u(cloud.size(), 0.0);
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (cloud.role(i) != NodeRole::Exterior) u[i] = c.field_value;
      }
      return u;
    }
    case FieldKind::Linear: return boundary_field(c, cloud);
    case FieldKind::Random: return random_field(cloud, c.seed);
    case FieldKind::Bump: {
      std::mt19937_64 rng(c.seed);
      return random_bump_field(cloud, rng);
    }
    case FieldKind::File: {
      std::ifstream in(c.field_file);
      require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + c.field_file);
      auto loaded = io::read_cloud_csv(in);
      require(loaded.field.has_value(), ErrorKind::Io, c.field_file + " has no u column");
      require(loaded.cloud == cloud, ErrorKind::SizeMismatch,
              c.field_file + " was written for a different cloud");
      return *loaded.field;
    }
  }
  return ScalarField(cloud.size(), 0.0);
}

inline void warn_small_p(RunContext& ctx, double p, std::size_t dim, double alpha) {
  const double threshold = 2.0 * static_cast<double>(dim) / alpha;
  if (p <= threshold) {
    ctx.warn("p = " + io::format_double(p) + " does not exceed 2N/alpha = " +
             io::format_double(threshold) + "; Hoelder-continuity bounds do not apply");
  }
}

inline void run_solve(RunContext& ctx) {
  const auto& c = ctx.config();
  const NodeCloud domain = discretize(c.domain);
  if (c.problem == ProblemKind::Dirichlet) {
    warn_small_p(ctx, c.p, domain.dimension(), c.alpha);
    const auto g = boundary_field(c, domain);
    auto [u, report] =
        minimize_dirichlet(domain, KernelSpec::alpha_power(c.alpha, c.p), g, ctx.solver("solve"));
    ctx.write_cloud(domain);
    ctx.write_field("solution", domain, u);
    ctx.record("solve", report);
    std::ostringstream os;
    io::write_solve_report_csv(os, report);
    ctx.write("report.csv", os.str());
    ctx.out() << "status=" << to_string(report.status) << " iterations=" << report.iterations
              << " energy=" << io::format_energy(report.final_energy) << '\n';
  } else {
    const NodeCloud cloud = enclose(domain, c.enclosure_factor, c.domain.resolution);
    const auto force = force_field(c, cloud);
    auto [u, report] = minimize_forced(cloud, c.s, c.p, force, ctx.solver("solve"));
    ctx.write_cloud(cloud);
    ctx.write_field("solution", cloud, u);
    ctx.write_field("force", cloud, force.values);
    ctx.record("solve", report);
    std::ostringstream os;
    io::write_solve_report_csv(os, report);
    ctx.write("report.csv", os.str());
    ctx.out() << "status=" << to_string(report.status) << " iterations=" << report.iterations
              << " functional=" << io::format_double(report.objective) << '\n';
  }
}

inline void run_infinity(RunContext& ctx) {
  const auto& c = ctx.config();
  const NodeCloud cloud = discretize(c.domain);
  const BoundaryData data{boundary_field(c, cloud), c.alpha};
  const auto u = holder_infinity_solve(cloud, data, c.infinity_tolerance);
  const auto residual = residual_report(u, cloud, c.alpha);
  ctx.write_cloud(cloud);
  ctx.write_field("infinity", cloud, u);
  std::ostringstream os;
  io::write_residual_csv(os, residual);
  ctx.write("report.csv", os.str());
  ctx.out() << "max_residual=" << io::format_double(residual.max_abs) << '\n';
}

inline void run_sweep_p(RunContext& ctx) {
  const auto& c = ctx.config();
  const NodeCloud cloud = discretize(c.domain);
  const std::size_t dim = cloud.dimension();
  for (double p : c.schedule_p) warn_small_p(ctx, p, dim, c.alpha);
  if (c.q <= 2.0 * static_cast<double>(dim) / c.alpha) {
    ctx.warn("q = " + io::format_double(c.q) + " does not exceed 2N/alpha");
  }
  PSweepSettings settings;
  settings.p_schedule = c.schedule_p;
  settings.q = c.q;
  settings.sup_gap_tolerance = c.sup_gap_tolerance;
  settings.liminf_tolerance = c.liminf_tolerance;
  settings.bisection_tolerance = c.infinity_tolerance;
  settings.solver = ctx.solver("sweep");
  const BoundaryData data{boundary_field(c, cloud), c.alpha};
  auto result = sweep_p(cloud, data, settings);

  ctx.write_cloud(cloud);
  ctx.write_field("reference", cloud, result.reference);
  for (const auto& step : result.steps) {
    ctx.write_field("p" + tag_number(step.p), cloud, step.field);
    ctx.record("p=" + tag_number(step.p), step.report);
  }
  if (c.competitors > 0) {
    const auto compat =
        compatibility_check(result.reference, cloud, c.alpha, c.competitors, c.seed);
    result.report.summary.push_back({"COMPATIBILITY", compat.pass, compat.margin});
    if (compat.counterexample) ctx.write_field("counterexample", cloud, *compat.counterexample);
  }
  ctx.write_report(result.report);
}

inline void run_sweep_s_above(RunContext& ctx) {
  const auto& c = ctx.config();
  const NodeCloud cloud = enclose(discretize(c.domain), c.enclosure_factor, c.domain.resolution);
  const auto force = force_field(c, cloud);
  SAboveSettings settings;
  settings.s_target = c.s_target;
  settings.s_schedule = c.schedule_s;
  settings.p = c.p;
  settings.gap_ratio = c.gap_ratio;
  settings.solver = ctx.solver("sweep");
  const auto result = sweep_s_above(cloud, force, settings);

  ctx.write_cloud(cloud);
  ctx.write_field("force", cloud, force.values);
  ctx.write_field("target", cloud, result.target_field);
  for (std::size_t k = 0; k < result.fields.size(); ++k) {
    const std::string tag = "s" + tag_number(c.schedule_s[k]);
    ctx.write_field(tag, cloud, result.fields[k]);
    ctx.record(tag, result.solves[k]);
  }
  ctx.record("target", result.solves.back());
  ctx.write_report(result.report);
}

inline void run_sweep_s_below(RunContext& ctx) {
  const auto& c = ctx.config();
  const NodeCloud cloud = discretize(c.domain);
  std::vector<ScalarField> fields;
  if (c.field == FieldKind::File) {
    fields.push_back(test_field(c, cloud));
  } else {
    std::mt19937_64 rng(c.seed);
    for (std::size_t k = 0; k < c.test_fields; ++k) fields.push_back(random_bump_field(cloud, rng));
  }
  SBelowSettings settings;
  settings.s_target = c.s_target;
  settings.s_schedule = c.schedule_s;
  settings.p = c.p;
  settings.gap_ratio = c.gap_ratio;
  const auto report = sweep_s_below(cloud, fields, settings);
  ctx.write_cloud(cloud);
  for (std::size_t k = 0; k < fields.size(); ++k) ctx.write_field(std::to_string(k), cloud, fields[k]);
  ctx.write_report(report);
}

inline void run_verify_gamma(RunContext& ctx) {
  const auto& c = ctx.config();
  const NodeCloud cloud = discretize(c.domain);
  const auto u = test_field(c, cloud);
  ctx.write_cloud(cloud);
  ctx.write_field("input", cloud, u);
  ctx.write_report(verify_gamma(u, cloud, c.alpha, c.schedule_p));
}

/// Main path versus brute-force oracles on a small instance.
inline void run_oracle(RunContext& ctx) {
  const auto& c = ctx.config();
  const NodeCloud cloud = discretize(c.domain);
  oracle::require_small(cloud);
  const auto g = boundary_field(c, cloud);
  const auto kernel = KernelSpec::alpha_power(c.alpha, c.p);

  GammaReport rep;
  rep.columns = {"check", "index", "main", "oracle", "abs_error"};
  auto [u, report] = minimize_dirichlet(cloud, kernel, g, ctx.solver("oracle"));
  ctx.record("solve", report);
  const auto reference = oracle::dirichlet_minimizer(cloud, c.alpha, c.p, g);
  double max_err = 0.0;
  for (std::size_t i : cloud.indices(NodeRole::Interior)) {
    const double e = std::abs(u[i] - reference[i]);
    rep.add_row({0, static_cast<double>(i), u[i], reference[i], e}, "minimizer");
    max_err = std::max(max_err, e);
  }
  rep.summary.push_back({"ORACLE_MINIMIZER", max_err <= 1e-4, 1e-4 - max_err});

  const auto v = random_field(cloud, c.seed);
  const auto grad = energy_gradient(v, cloud, kernel, Region::DomainOnly);
  const auto free = cloud.indices(NodeRole::Interior);
  const auto fd = oracle::central_differences(
      [&](const ScalarField& w) {
        return oracle::direct_pair_sum(w, cloud, c.p, kernel.kappa(cloud.dimension()));
      },
      v, free, 1e-5);
  double scale = 0.0;
  for (double d : fd) scale = std::max(scale, std::abs(d));
  if (scale == 0.0) scale = 1.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < free.size(); ++k) {
    const double main = grad.true_value(free[k]);
    const double e = std::abs(main - fd[k]);
    rep.add_row({1, static_cast<double>(free[k]), main, fd[k], e}, "gradient");
    worst = std::max(worst, e / scale);
  }
  rep.summary.push_back({"GRADIENT", worst <= 1e-5, 1e-5 - worst});

  double sup_err = 0.0;
  for (int closure = 0; closure < 2; ++closure) {
    const double main = sup_quotient(v, cloud, c.alpha, closure == 1).value;
    const double brute = oracle::brute_sup_quotient(v, cloud, c.alpha, closure == 1);
    const double e = std::abs(main - brute);
    rep.add_row({2, static_cast<double>(closure), main, brute, e}, "sup_quotient");
    sup_err = std::max(sup_err, e / std::max(brute, 1.0));
  }
  rep.summary.push_back({"SUP_QUOTIENT", sup_err <= 1e-12, 1e-12 - sup_err});

  ctx.write_cloud(cloud);
  ctx.write_field("solution", cloud, u);
  ctx.write_field("oracle", cloud, reference);
  ctx.write_report(rep);
}

}  // namespace detail

/// Executes one configured command. Returns 0 on success, 1 when a solve ends
/// without converging, 2 when a summary flag fails, 3 on configuration or
/// input errors. Diagnostics go to `err`, summary lines to `out`.
inline int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    detail::RunContext ctx(config, out, err);
    switch (config.command) {
      case Command::Solve: detail::run_solve(ctx); break;
      case Command::Infinity: detail::run_infinity(ctx); break;
      case Command::SweepP: detail::run_sweep_p(ctx); break;
      case Command::SweepSAbove: detail::run_sweep_s_above(ctx); break;
      case Command::SweepSBelow: detail::run_sweep_s_below(ctx); break;
      case Command::VerifyGamma: detail::run_verify_gamma(ctx); break;
      case Command::Oracle: detail::run_oracle(ctx); break;
    }
    return ctx.finish();
  } catch (const ConfigError& e) {
    err << "config error";
    if (e.line() > 0) err << " (line " << e.line() << ")";
    err << ": " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitConfig;
}

/// Parses `text` and runs it; parse errors map to exit code 3.
inline int run_text(std::string_view text, const ConfigOverrides& overrides, std::ostream& out,
                    std::ostream& err) {
  RunConfig config;
  try {
    config = parse_config(text, overrides);
  } catch (const ConfigError& e) {
    err << "config error";
    if (e.line() > 0) err << " (line " << e.line() << ")";
    err << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return run(config, out, err);
}

}  // namespace fracgamma
