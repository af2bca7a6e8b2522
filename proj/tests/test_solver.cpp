#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fracgamma/harness.hpp"
#include "fracgamma/oracle.hpp"
#include "fracgamma/solver.hpp"

using namespace fracgamma;

namespace {

NodeCloud three_points() {
  return NodeCloud(1, {0.0, 0.5, 1.0}, {1.0, 1.0, 1.0},
                   {NodeRole::Boundary, NodeRole::Interior, NodeRole::Boundary});
}

ScalarField linear_data(const NodeCloud& c, std::vector<double> coeffs, double offset = 0.0) {
  ScalarField g(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    g[i] = offset;
    for (std::size_t a = 0; a < c.dimension(); ++a) g[i] += coeffs[a] * c.coord(i, a);
  }
  return g;
}

double max_abs_diff(const ScalarField& u, const ScalarField& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
  return m;
}

// Gaussian elimination with partial pivoting on a dense row-major system.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
    }
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a[r][k] / a[k][k];
      for (std::size_t c = k; c < n; ++c) a[r][c] -= f * a[k][c];
      b[r] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double acc = b[k];
    for (std::size_t c = k + 1; c < n; ++c) acc -= a[k][c] * x[c];
    x[k] = acc / a[k][k];
  }
  return x;
}

// p = 2 stationarity: sum_j w_i w_j (u_i - u_j) d_ij^-kappa = 0 at free i.
ScalarField quadratic_oracle(const NodeCloud& c, double alpha, const ScalarField& g) {
  const auto free = c.indices(NodeRole::Interior);
  std::vector<std::size_t> slot(c.size(), free.size());
  for (std::size_t k = 0; k < free.size(); ++k) slot[free[k]] = k;
  std::vector<std::vector<double>> a(free.size(), std::vector<double>(free.size(), 0.0));
  std::vector<double> b(free.size(), 0.0);
  for (std::size_t k = 0; k < free.size(); ++k) {
    const std::size_t i = free[k];
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j == i) continue;
      const double kij = c.weight(i) * c.weight(j) * std::pow(c.distance(i, j), -2.0 * alpha);
      a[k][k] += kij;
      if (slot[j] < free.size()) {
        a[k][slot[j]] -= kij;
      } else {
        b[k] += kij * g[j];
      }
    }
  }
  const auto x = dense_solve(a, b);
  ScalarField u = g;
  for (std::size_t k = 0; k < free.size(); ++k) u[free[k]] = x[k];
  return u;
}

SolveConfig tight() {
  SolveConfig c;
  c.grad_tolerance = 1e-10;
  return c;
}

}  // namespace

TEST(MinimizeDirichlet, SymmetricThreeNodes) {
  const auto c = three_points();
  const ScalarField g{0.0, 0.0, 1.0};
  for (double p : {2.0, 8.0, 64.0, 512.0}) {
    const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, p), g, tight());
    EXPECT_EQ(report.status, SolveStatus::Converged) << p;
    EXPECT_NEAR(u[1], 0.5, 1e-8) << p;
    EXPECT_EQ(u[0], 0.0);
    EXPECT_EQ(u[2], 1.0);
  }
}

TEST(MinimizeDirichlet, ConstantData) {
  const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 0.25});
  const ScalarField g(c.size(), -1.25);
  const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, 6), g, tight());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(u[i], -1.25, 1e-12);
  EXPECT_EQ(report.final_energy.raw_value, 0.0);
}

TEST(MinimizeDirichlet, QuadraticMatchesDenseSolve) {
  for (double h : {0.5, 0.25}) {
    const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, h});
    ScalarField g(c.size(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      g[i] = std::sin(3.0 * c.coord(i, 0)) + c.coord(i, 1) * c.coord(i, 1);
    }
    const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.75, 2.0), g, tight());
    EXPECT_EQ(report.status, SolveStatus::Converged);
    EXPECT_LE(max_abs_diff(u, quadratic_oracle(c, 0.75, g)), 1e-9) << h;
  }
}

TEST(MinimizeDirichlet, SingleFreeNodeWeightedMean) {
  const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 0.5});
  const auto g = linear_data(c, {2.0, -1.0}, 0.5);
  ScalarField g2 = g;
  for (std::size_t i = 0; i < c.size(); ++i) g2[i] += (i % 2 == 0 ? 0.3 : 0.0);
  const std::size_t x = c.indices(NodeRole::Interior).front();
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j == x) continue;
    const double k = c.weight(x) * c.weight(j) * std::pow(c.distance(x, j), -1.5);
    num += k * g2[j];
    den += k;
  }
  const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.75, 2.0), g2, tight());
  EXPECT_NEAR(u[x], num / den, 1e-10);
}

TEST(MinimizeDirichlet, FeasibilityIsExact) {
  const auto c = discretize({Disk{{0.0, 0.0}, 1.0}, 0.25});
  ScalarField g(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) g[i] = std::atan2(c.coord(i, 1), c.coord(i, 0) + 2.0) / 3.0;
  const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, 4.0), g, SolveConfig{});
  for (std::size_t i : c.indices(NodeRole::Boundary)) EXPECT_EQ(u[i], g[i]);
}

TEST(MinimizeDirichlet, TraceObjectiveNeverIncreases) {
  const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 0.125});
  const auto g = linear_data(c, {1.0, 0.5});
  SolveConfig cfg;
  std::vector<TraceEntry> trace;
  cfg.trace = [&](const TraceEntry& e) { trace.push_back(e); };
  const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, 16.0), g, cfg,
                                              random_field(c, 3));
  ASSERT_GT(trace.size(), 2u);
  for (std::size_t k = 1; k < trace.size(); ++k) {
    EXPECT_LE(trace[k].objective, trace[k - 1].objective) << k;
  }
  EXPECT_EQ(report.status, SolveStatus::Converged);
}

TEST(MinimizeDirichlet, InitializationIndependence) {
  const auto c = discretize({Interval{0.0, 1.0}, 1.0 / 16.0});
  ScalarField g(c.size(), 0.0);
  g[c.size() - 1] = 1.0;
  const auto cfg = tight();
  for (double p : {3.0, 16.0}) {
    const auto kernel = KernelSpec::alpha_power(0.5, p);
    const auto [u1, r1] = minimize_dirichlet(c, kernel, g, cfg, random_field(c, 1));
    const auto [u2, r2] = minimize_dirichlet(c, kernel, g, cfg, random_field(c, 2));
    EXPECT_EQ(r1.status, SolveStatus::Converged);
    EXPECT_EQ(r2.status, SolveStatus::Converged);
    EXPECT_LE(max_abs_diff(u1, u2), 10 * 1e-8) << p;
  }
}

TEST(MinimizeDirichlet, OracleEquivalence1D) {
  const auto c = discretize({Interval{0.0, 1.0}, 0.2});
  ASSERT_EQ(c.count(NodeRole::Interior), 4u);
  ScalarField g(c.size(), 0.0);
  g[c.size() - 1] = 1.0;
  for (double p : {2.0, 8.0}) {
    const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, p), g, tight());
    const auto ref = oracle::dirichlet_minimizer(c, 0.5, p, g);
    EXPECT_LE(max_abs_diff(u, ref), 1e-4) << p;
  }
}

TEST(MinimizeDirichlet, OracleEquivalence2D) {
  const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 1.0 / 3.0});
  ASSERT_EQ(c.count(NodeRole::Interior), 4u);
  const auto g = linear_data(c, {1.0, 0.3});
  ScalarField g2 = g;
  for (std::size_t i : c.indices(NodeRole::Boundary)) g2[i] += 0.2 * std::cos(7.0 * i);
  const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, 4.0), g2, tight());
  const auto ref = oracle::dirichlet_minimizer(c, 0.5, 4.0, g2);
  EXPECT_LE(max_abs_diff(u, ref), 1e-4);
}

TEST(MinimizeDirichlet, MaxIterationsStatus) {
  const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 0.125});
  SolveConfig cfg;
  cfg.max_iterations = 1;
  const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, 64.0),
                                              linear_data(c, {1.0, 1.0}), cfg, random_field(c, 1));
  EXPECT_EQ(report.status, SolveStatus::MaxIterations);
  EXPECT_EQ(report.iterations, 1u);
}

TEST(MinimizeDirichlet, FixedStepRule) {
  const auto c = three_points();
  SolveConfig cfg = tight();
  cfg.step_rule = FixedStep{0.5};
  const auto [u, report] =
      minimize_dirichlet(c, KernelSpec::alpha_power(0.5, 4.0), ScalarField{0.0, 0.9, 1.0}, cfg,
                         ScalarField{0.0, 0.9, 1.0});
  EXPECT_EQ(report.status, SolveStatus::Converged);
  EXPECT_NEAR(u[1], 0.5, 1e-6);
}

TEST(MinimizeDirichlet, RejectsGagliardoKernel) {
  EXPECT_THROW(minimize_dirichlet(three_points(), KernelSpec::gagliardo(0.5, 2.0),
                                  ScalarField{0.0, 0.0, 1.0}, SolveConfig{}),
               Error);
}

TEST(SolveConfig, Validation) {
  SolveConfig cfg;
  cfg.step_rule = BacktrackingArmijo{1.5, 0.5};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.step_rule = BacktrackingArmijo{1e-4, 1.0};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.step_rule = FixedStep{0.0};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.step_rule = BacktrackingArmijo{};
  cfg.grad_tolerance = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(MinimizeForced, ZeroForceGivesZero) {
  const auto c = enclose(discretize({Interval{0.0, 1.0}, 1.0 / 16.0}), 2.0, 1.0 / 16.0);
  const auto [u, report] =
      minimize_forced(c, 0.5, 3.0, ForceSpec{ScalarField(c.size(), 0.0)}, SolveConfig{});
  for (double v : u) EXPECT_EQ(v, 0.0);
}

TEST(MinimizeForced, SingleNodeVertexFormula) {
  const auto c = enclose(discretize({Interval{0.0, 1.0}, 0.5}), 2.0, 0.5);
  const std::size_t x = c.indices(NodeRole::Interior).front();
  for (double s : {0.2, 0.5, 0.8}) {
    ForceSpec force{ScalarField(c.size(), 0.0)};
    force.values[x] = 1.3;
    double denom = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j != x) denom += c.weight(x) * c.weight(j) * std::pow(c.distance(x, j), -(1.0 + 2.0 * s));
    }
    const double expected = -(c.weight(x) * 1.3) / (2.0 * denom);
    const auto [u, report] = minimize_forced(c, s, 2.0, force, tight());
    EXPECT_NEAR(u[x], expected, 1e-12) << s;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i != x) {
        EXPECT_EQ(u[i], 0.0);
      }
    }
  }
}

TEST(MinimizeForced, SignFlip) {
  const auto c = enclose(discretize({Interval{0.0, 1.0}, 1.0 / 16.0}), 2.0, 1.0 / 16.0);
  const auto f = smooth_force(c, 11);
  ForceSpec neg = f;
  for (auto& v : neg.values.values()) v = -v;
  for (double p : {2.0, 3.0}) {
    const auto [u, r1] = minimize_forced(c, 0.5, p, f, tight());
    const auto [w, r2] = minimize_forced(c, 0.5, p, neg, tight());
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(u[i], -w[i]) << p << ' ' << i;
  }
}

TEST(MinimizeForced, StationarityAtSolution) {
  const auto c = enclose(discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 0.25}), 2.0, 0.25);
  const auto f = smooth_force(c, 4);
  const auto [u, report] = minimize_forced(c, 0.4, 3.0, f, SolveConfig{});
  EXPECT_EQ(report.status, SolveStatus::Converged);
  EXPECT_LE(report.scaled_grad_norm, 1e-8);
  EXPECT_LE(check_optimality(u, c, 0.4, 3.0, f, 20, 5), 1e-6);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.role(i) != NodeRole::Interior) {
      EXPECT_EQ(u[i], 0.0);
    }
  }
}

TEST(MinimizeForced, NeedsExteriorNodes) {
  EXPECT_THROW(minimize_forced(three_points(), 0.5, 2.0, ForceSpec{ScalarField(3, 1.0)},
                               SolveConfig{}),
               Error);
}

TEST(Homotopy, SingleEntryMatchesSolve) {
  const auto c = discretize({Interval{0.0, 1.0}, 1.0 / 16.0});
  const auto g = linear_data(c, {1.0});
  const auto steps = homotopy_sweep(c, 0.5, g, {2.0}, tight());
  ASSERT_EQ(steps.size(), 1u);
  const auto [u, report] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, 2.0), g, tight());
  EXPECT_EQ(steps[0].field, u);
}

TEST(Homotopy, WarmStartsNeedNoMoreIterations) {
  const auto c = three_points();
  const ScalarField g{0.0, 0.0, 1.0};
  const auto steps = homotopy_sweep(c, 0.5, g, {2.0, 4.0, 8.0}, tight());
  for (const auto& step : steps) {
    const auto [u, cold] = minimize_dirichlet(c, KernelSpec::alpha_power(0.5, step.p), g, tight());
    EXPECT_LE(step.report.iterations, cold.iterations);
    EXPECT_NEAR(step.field[1], 0.5, 1e-12);
  }
}

TEST(Homotopy, SupQuotientNonIncreasingAlongSchedule) {
  const auto c = discretize({Interval{0.0, 1.0}, 1.0 / 16.0});
  const auto g = linear_data(c, {1.0});
  const auto steps = homotopy_sweep(c, 0.5, g, {8, 16, 32, 64, 128, 256, 512}, SolveConfig{});
  ASSERT_EQ(steps.size(), 7u);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& step : steps) {
    EXPECT_EQ(step.report.status, SolveStatus::Converged) << step.p;
    const double q = sup_quotient(step.field, c, 0.5, true).value;
    EXPECT_LE(q, prev + 1e-6) << step.p;
    prev = q;
  }
}

TEST(Homotopy, RejectsBadSchedules) {
  const auto c = three_points();
  const ScalarField g{0.0, 0.0, 1.0};
  EXPECT_THROW(homotopy_sweep(c, 0.5, g, {8.0, 4.0}, SolveConfig{}), Error);
  EXPECT_THROW(homotopy_sweep(c, 0.5, g, {1.0, 4.0}, SolveConfig{}), Error);
  EXPECT_THROW(homotopy_sweep(c, 0.5, g, {}, SolveConfig{}), Error);
}

TEST(CheckOptimality, ExactAndPerturbed) {
  const auto c = three_points();
  const auto k = KernelSpec::alpha_power(0.5, 8.0);
  EXPECT_LE(check_optimality(ScalarField{0.0, 0.5, 1.0}, c, k, 10, 1), 1e-12);
  EXPECT_GT(check_optimality(ScalarField{0.0, 0.6, 1.0}, c, k, 10, 1), 0.0);
}

TEST(CheckOptimality, SolverOutput) {
  const auto c = discretize({Box{{0.0, 0.0}, {1.0, 1.0}}, 0.125});
  const auto g = linear_data(c, {1.0, -0.5});
  for (double p : {3.0, 32.0}) {
    const auto k = KernelSpec::alpha_power(0.5, p);
    const auto [u, report] = minimize_dirichlet(c, k, g, SolveConfig{});
    EXPECT_EQ(report.status, SolveStatus::Converged);
    EXPECT_LE(check_optimality(u, c, k, 20, 9), 1e-6) << p;
  }
}
