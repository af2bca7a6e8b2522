// Prints one PASS/FAIL line per acceptance criterion and exits nonzero on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracgamma.hpp"

using namespace fracgamma;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Verdict()> body;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

SolveConfig tight() {
  SolveConfig c;
  c.grad_tolerance = 1e-10;
  return c;
}

NodeCloud two_point_line(std::size_t interior) {
  const std::size_t n = interior + 2;
  const double h = 1.0 / static_cast<double>(n - 1);
  std::vector<double> coords(n);
  std::vector<NodeRole> roles(n, NodeRole::Interior);
  for (std::size_t i = 0; i < n; ++i) coords[i] = static_cast<double>(i) * h;
  roles.front() = roles.back() = NodeRole::Boundary;
  return NodeCloud(1, coords, std::vector<double>(n, h), roles);
}

ScalarField step_data(const NodeCloud& c) {
  ScalarField g(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) g[i] = c.coord(i, 0) > 0.5 ? 1.0 : 0.0;
  return g;
}

ScalarField linear_data(const NodeCloud& c, const std::vector<double>& coeffs) {
  ScalarField g(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t a = 0; a < c.dimension(); ++a) g[i] += coeffs[a] * c.coord(i, a);
  }
  return g;
}

std::vector<DomainSpec> presets() {
  return {{Interval{0.0, 1.0}, 1.0 / 16.0},
          {Interval{0.0, 1.0}, 1.0 / 32.0},
          {Interval{0.0, 1.0}, 1.0 / 64.0},
          {Box{{0.0, 0.0}, {1.0, 1.0}}, 0.125},
          {Disk{{0.0, 0.0}, 1.0}, 0.25}};
}

NodeCloud interval17() { return discretize({Interval{0.0, 1.0}, 1.0 / 16.0}); }

double max_abs_diff(const ScalarField& u, const ScalarField& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
  return m;
}

const SummaryFlag& flag(const GammaReport& r, const std::string& key) {
  for (const auto& f : r.summary) {
    if (f.key == key) return f;
  }
  throw std::runtime_error("missing summary flag " + key);
}

Verdict symmetry() {
  const NodeCloud c(1, {0.0, 0.5, 1.0}, {1.0, 1.0, 1.0},
                    {NodeRole::Boundary, NodeRole::Interior, NodeRole::Boundary});
  const ScalarField g{0.0, 0.0, 1.0};
  double worst = 0.0;
  bool converged = true;
  for (double p : {2.0, 8.0, 64.0, 512.0}) {
    const auto [u, r] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, p), g, tight());
    worst = std::max(worst, std::abs(u[1] - 0.5));
    converged = converged && r.status == SolveStatus::Converged;
  }
  return {converged && worst <= 1e-8, "max |u-0.5| = " + num(worst)};
}

Verdict closed_form() {
  const auto c = two_point_line(16);
  const double tol = 1e-13;
  double worst = 0.0, linear = 0.0;
  for (double alpha : {0.25, 0.5, 1.0}) {
    const auto u = holder_infinity_solve(c, {step_data(c), alpha}, tol);
    for (std::size_t i : c.indices(NodeRole::Interior)) {
      const double x = c.coord(i, 0);
      const double a = std::pow(x, alpha) / (std::pow(x, alpha) + std::pow(1.0 - x, alpha));
      worst = std::max(worst, std::abs(u[i] - a));
      if (alpha == 1.0) linear = std::max(linear, std::abs(u[i] - x));
    }
  }
  return {worst <= 1e-10 && linear <= tol,
          "max error " + num(worst) + ", alpha=1 vs linear " + num(linear)};
}

Verdict residual() {
  const auto c1 = interval17();
  const double exact =
      residual_report(holder_infinity_solve(c1, {step_data(c1), 1.0}, 1e-14), c1, 1.0).max_abs;
  std::vector<double> seq;
  for (double h : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
    const auto c = discretize({Interval{0.0, 1.0}, h});
    const auto u = holder_infinity_solve(c, {step_data(c), 0.5}, 1e-14);
    seq.push_back(residual_report(u, c, 0.5).max_abs);
  }
  bool mono = true;
  for (std::size_t k = 1; k < seq.size(); ++k) mono = mono && seq[k] <= seq[k - 1] + 1e-8;
  return {exact <= 1e-8 && mono, "alpha=1 max " + num(exact) + ", alpha=0.5 sequence " +
                                     num(seq[0]) + " " + num(seq[1]) + " " + num(seq[2])};
}

Verdict limsup() {
  const std::vector<double> ps{8, 16, 32, 64, 128, 256, 512};
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& spec : presets()) {
    const auto c = discretize(spec);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      for (const auto& s : verify_limsup(random_field(c, seed), c, 0.5, ps)) {
        worst = std::min(worst, s.slack);
      }
    }
  }
  return {worst >= -1e-12, "min slack " + num(worst)};
}

Verdict monotone_comparison() {
  const auto c = enclose(interval17(), 2.0, 1.0 / 16.0);
  const PairTable table(c, Region::EnclosedBall);
  const double r = table.span();
  const std::vector<std::pair<double, double>> pairs{{0.1, 0.2}, {0.1, 0.9}, {0.2, 0.5},
                                                     {0.3, 0.4}, {0.25, 0.75}, {0.4, 0.6},
                                                     {0.45, 0.5}, {0.5, 0.8}, {0.6, 0.95},
                                                     {0.05, 0.5}};
  const double p = 3.0;
  std::mt19937_64 rng(23);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_bump_field(c, rng);
    for (auto [k, s] : pairs) {
      const double ek = pair_sum(u, table, KernelSpec::gagliardo(k, p)).raw_value;
      const double es = pair_sum(u, table, KernelSpec::gagliardo(s, p)).raw_value;
      worst = std::min(worst, std::pow(r, (s - k) * p) * es - ek);
    }
  }
  return {worst >= -1e-12, "min slack " + num(worst)};
}

Verdict p_sweep() {
  const auto c = interval17();
  PSweepSettings settings;
  settings.p_schedule = {8, 16, 32, 64, 128, 256, 512};
  settings.q = 16.0;
  const auto result = sweep_p(c, {linear_data(c, {1.0}), 1.0}, settings);
  const auto& rep = result.report;
  const auto dcol = rep.column("lq_distance");
  const double d8 = rep.rows.front()[dcol];
  const double d512 = rep.rows.back()[dcol];
  const double s512 = rep.rows.back()[rep.column("sup_closure")];
  const double sref = sup_quotient(result.reference, c, 1.0, true).value;
  const double rel = std::abs(s512 - sref) / sref;
  return {d512 < d8 && rel <= 0.05, "distance " + num(d8) + " -> " + num(d512) +
                                        ", sup gap " + num(100.0 * rel) + "%"};
}

Verdict compatibility() {
  struct Case {
    DomainSpec spec;
    std::vector<double> coeffs;
  };
  const std::vector<Case> cases{{{Interval{0.0, 1.0}, 1.0 / 16.0}, {1.0}},
                                {{Box{{0.0, 0.0}, {1.0, 1.0}}, 0.125}, {1.0, 0.5}}};
  std::string detail;
  bool pass = true;
  for (const auto& k : cases) {
    const auto c = discretize(k.spec);
    for (double alpha : {0.5, 1.0}) {
      const auto u = holder_infinity_solve(c, {linear_data(c, k.coeffs), alpha}, 1e-13);
      const auto r = compatibility_check(u, c, alpha, 200, 7);
      pass = pass && r.margin >= -1e-9;
      detail += (detail.empty() ? "" : ", ") + std::string("N=") + std::to_string(c.dimension()) +
                " alpha=" + num(alpha) + " margin " + num(r.margin);
    }
  }
  return {pass, detail};
}

Verdict s_above() {
  const auto c = enclose(interval17(), 2.0, 1.0 / 16.0);
  SAboveSettings settings;
  settings.s_target = 0.5;
  settings.s_schedule = {0.8, 0.7, 0.6, 0.55, 0.51};
  settings.p = 3.0;
  settings.gap_ratio = 0.25;
  settings.distance_slack = 1e-6;
  const auto result = sweep_s_above(c, smooth_force(c, 11), settings);
  const auto& rep = result.report;
  const auto gcol = rep.column("functional_gap");
  const double g0 = rep.rows.front()[gcol];
  const double g1 = rep.rows.back()[gcol];
  const auto dcol = rep.column("lp_distance");
  double d_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    d_margin = std::min(d_margin, rep.rows[k - 1][dcol] + 1e-6 - rep.rows[k][dcol]);
  }
  bool converged = true;
  for (const auto& s : result.solves) converged = converged && s.status == SolveStatus::Converged;
  return {converged && g1 < 0.25 * g0 && d_margin >= 0.0,
          "gap " + num(g0) + " -> " + num(g1) + ", distance margin " + num(d_margin)};
}

Verdict s_below() {
  const auto c = interval17();
  std::mt19937_64 rng(5);
  std::vector<ScalarField> fields;
  for (int k = 0; k < 25; ++k) fields.push_back(random_bump_field(c, rng));
  SBelowSettings settings;
  settings.s_target = 0.5;
  settings.s_schedule = {0.2, 0.3, 0.4, 0.45, 0.49};
  settings.p = 3.0;
  settings.gap_ratio = 0.10;
  const auto rep = sweep_s_below(c, fields, settings);
  const auto& mono = flag(rep, "MONOTONE");
  const auto& gap = flag(rep, "GAP");
  return {mono.pass && gap.pass,
          "monotone margin " + num(mono.margin) + ", gap margin " + num(gap.margin)};
}

Verdict brute_force() {
  struct Instance {
    NodeCloud cloud;
    ScalarField g;
    double p;
  };
  std::vector<Instance> instances;
  {
    const auto c = discretize({Interval{0.0, 1.0}, 0.2});
    for (double p : {2.0, 8.0}) instances.push_back({c, step_data(c), p});
  }
  {
    const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 1.0 / 3.0});
    auto g = linear_data(c, {1.0, 0.3});
    for (std::size_t i : c.indices(NodeRole::Boundary)) g[i] += 0.2 * std::cos(7.0 * i);
    instances.push_back({c, g, 4.0});
  }
  const double alpha = 0.5;
  double sol_err = 0.0, grad_err = 0.0;
  for (const auto& inst : instances) {
    const auto& c = inst.cloud;
    const auto kernel = KernelSpec::alpha_power(alpha, inst.p);
    const auto [u, r] = minimize_dirichlet(c, kernel, inst.g, tight());
    sol_err = std::max(sol_err, max_abs_diff(u, oracle::dirichlet_minimizer(c, alpha, inst.p, inst.g)));

    const auto v = random_field(c, 3);
    const auto grad = energy_gradient(v, c, kernel, Region::DomainOnly);
    const auto free = c.indices(NodeRole::Interior);
    const auto fd = oracle::central_differences(
        [&](const ScalarField& w) { return oracle::direct_pair_sum(w, c, inst.p, alpha * inst.p); },
        v, free, 1e-5);
    double scale = 0.0;
    for (double d : fd) scale = std::max(scale, std::abs(d));
    for (std::size_t k = 0; k < free.size(); ++k) {
      grad_err = std::max(grad_err, std::abs(grad.true_value(free[k]) - fd[k]) / scale);
    }
  }
  return {sol_err <= 1e-4 && grad_err <= 1e-5,
          std::to_string(instances.size()) + " instances, solver vs oracle " + num(sol_err) +
              ", gradient relative error " + num(grad_err)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict determinism() {
  const std::vector<std::pair<std::string, std::string>> docs{
      {"sweep-p", "command = sweep-p\ndomain.preset = interval17\nkernel.alpha = 1\n"
                  "compat.competitors = 200\nseed = 7\n"},
      {"sweep-s-above", "command = sweep-s-above\nkernel.p = 3\nschedule.s = 0.8,0.7,0.6,0.55,0.51\n"
                        "seed = 11\n"},
      {"sweep-s-below", "command = sweep-s-below\nkernel.p = 3\nschedule.s = 0.2,0.3,0.4,0.45,0.49\n"
                        "sweep.gap_ratio = 0.1\nseed = 5\n"},
      {"verify-gamma", "command = verify-gamma\ndomain.preset = square9\nseed = 3\n"},
      {"oracle", "command = oracle\ndomain.shape = interval\ndomain.lo = 0\ndomain.hi = 1\n"
                 "domain.h = 0.2\nkernel.p = 8\nboundary.kind = values\nboundary.values = 0,1\n"},
  };
  const fs::path root = fs::temp_directory_path() / "fracgamma_acceptance";
  std::size_t compared = 0;
  for (const auto& [name, doc] : docs) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (name + "_" + std::to_string(rep));
      fs::remove_all(dir);
      ConfigOverrides o;
      o.output_dir = dir.string();
      std::ostringstream out, err;
      const int code = run_text(doc, o, out, err);
      if (code != kExitOk) return {false, name + " exited " + std::to_string(code) + ": " + err.str()};
      const auto body = slurp(dir / "report.csv");
      if (rep == 0) {
        first = body;
      } else if (body != first) {
        return {false, name + " report.csv differs between runs"};
      }
    }
    ++compared;
  }
  fs::remove_all(root);
  return {true, std::to_string(compared) + " commands rerun with identical report.csv"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "symmetry oracle", 1.0, symmetry},
      {2, "implicit-formula closed form", 1.0, closed_form},
      {3, "residual", 5.0, residual},
      {4, "limsup slack", 30.0, limsup},
      {5, "monotone comparison", 30.0, monotone_comparison},
      {6, "p-sweep trend", 60.0, p_sweep},
      {7, "Dirichlet compatibility", 60.0, compatibility},
      {8, "s decreasing sweep", 60.0, s_above},
      {9, "s increasing monotonicity", 30.0, s_below},
      {10, "brute-force equivalence", 60.0, brute_force},
      {11, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s == 0.0 || secs < c.budget_s;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << " "
              << v.detail << " [" << num(secs) << " s";
    if (c.budget_s > 0.0) std::cout << " of " << num(c.budget_s) << " s";
    std::cout << (in_time ? "" : ", over budget") << "]\n";
  }
  return failures == 0 ? 0 : 1;
}
