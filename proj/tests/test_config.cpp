#include <gtest/gtest.h>

#include "fracgamma/config.hpp"

using namespace fracgamma;

namespace {

ConfigError parse_error(const std::string& text, const ConfigOverrides& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a config error for:\n" << text;
  return ConfigError("none");
}

}  // namespace

TEST(ParseConfig, MinimalSolveFillsDefaults) {
  const auto c = parse_config(
      "command = solve\n"
      "domain.preset = interval17\n"
      "kernel.alpha = 0.5\n"
      "kernel.p = 8\n"
      "boundary.kind = values\n"
      "boundary.values = 0, 1\n");
  EXPECT_EQ(c.command, Command::Solve);
  EXPECT_EQ(c.domain, (DomainSpec{Interval{0.0, 1.0}, 1.0 / 16.0}));
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.p, 8.0);
  EXPECT_EQ(c.boundary, BoundaryKind::Values);
  EXPECT_EQ(c.boundary_values, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(c.enclosure_factor, 2.0);
  EXPECT_EQ(c.solver.grad_tolerance, 1e-8);
  EXPECT_EQ(c.infinity_tolerance, 1e-13);
  EXPECT_EQ(c.seed, 1u);
}

TEST(ParseConfig, CommentsAndBlankLines) {
  const auto c = parse_config(
      "# experiment\n"
      "\n"
      "   kernel.alpha = 0.25   # trailing\n"
      "seed=99\n");
  EXPECT_EQ(c.alpha, 0.25);
  EXPECT_EQ(c.seed, 99u);
}

TEST(ParseConfig, Presets) {
  EXPECT_EQ(parse_config("domain.preset = interval65\n").domain.resolution, 1.0 / 64.0);
  EXPECT_EQ(parse_config("domain.preset = square9\n").domain,
            (DomainSpec{Box{{0.0, 0.0}, {1.0, 1.0}}, 0.125}));
  EXPECT_EQ(parse_config("domain.preset = disk\n").domain,
            (DomainSpec{Disk{{0.0, 0.0}, 1.0}, 0.25}));
  const auto e = parse_error("domain.preset = torus\n");
  EXPECT_EQ(e.key(), "domain.preset");
}

TEST(ParseConfig, ExplicitShapes) {
  const auto c = parse_config(
      "domain.shape = box\ndomain.lo = -1,0\ndomain.hi = 1,2\ndomain.h = 0.5\n"
      "boundary.coeffs = 1,1\n");
  EXPECT_EQ(c.domain, (DomainSpec{Box{{-1.0, 0.0}, {1.0, 2.0}}, 0.5}));
  const auto d = parse_config(
      "domain.shape = disk\ndomain.center = 0.5,0.5\ndomain.radius = 2\ndomain.h = 0.25\n");
  EXPECT_EQ(d.domain, (DomainSpec{Disk{{0.5, 0.5}, 2.0}, 0.25}));
  EXPECT_EQ(d.boundary_coeffs, (std::vector<double>{1.0, 0.0}));
}

TEST(ParseConfig, DecreasingPScheduleRejected) {
  const auto e = parse_error("command = sweep-p\nschedule.p = 8,32,16\n");
  EXPECT_NE(std::string(e.what()).find("schedule must be strictly increasing"), std::string::npos);
  EXPECT_EQ(e.key(), "schedule.p");
  EXPECT_EQ(e.line(), 2u);
}

TEST(ParseConfig, UnknownKeyNamed) {
  const auto e = parse_error("kernel.alpha = 0.5\n\nkernel.alpha_ = 0.5\n");
  EXPECT_EQ(e.key(), "kernel.alpha_");
  EXPECT_EQ(e.line(), 3u);
  const std::string what = e.what();
  EXPECT_NE(what.find("kernel.alpha_"), std::string::npos);
  EXPECT_NE(what.find("line 3"), std::string::npos);
}

TEST(ParseConfig, DuplicateKey) {
  const auto e = parse_error("kernel.p = 4\nkernel.p = 8\n");
  EXPECT_EQ(e.line(), 2u);
  EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
}

TEST(ParseConfig, MalformedLines) {
  EXPECT_EQ(parse_error("kernel.p 4\n").line(), 1u);
  EXPECT_EQ(parse_error("seed = 1\n= 4\n").line(), 2u);
}

TEST(ParseConfig, BadValues) {
  EXPECT_EQ(parse_error("kernel.p = eight\n").key(), "kernel.p");
  EXPECT_EQ(parse_error("seed = -3\n").key(), "seed");
  EXPECT_EQ(parse_error("sweep.test_fields = 2.5\n").key(), "sweep.test_fields");
  EXPECT_EQ(parse_error("solver.precondition = yes\n").key(), "solver.precondition");
  EXPECT_EQ(parse_error("problem = neumann\n").key(), "problem");
  EXPECT_EQ(parse_error("schedule.p = 8,x\n").key(), "schedule.p");
  EXPECT_EQ(parse_error("command = integrate\n").key(), "command");
}

TEST(ParseConfig, RangeChecks) {
  EXPECT_EQ(parse_error("kernel.alpha = 1.5\n").key(), "kernel.alpha");
  EXPECT_EQ(parse_error("kernel.alpha = 0\n").key(), "kernel.alpha");
  EXPECT_EQ(parse_error("kernel.p = 1\n").key(), "kernel.p");
  EXPECT_EQ(parse_error("kernel.s = 1\n").key(), "kernel.s");
  EXPECT_EQ(parse_error("domain.t = 1\n").key(), "domain.t");
  EXPECT_EQ(parse_error("solver.armijo_c = 1\n").key(), "solver.armijo_c");
  EXPECT_EQ(parse_error("solver.max_iterations = 0\n").key(), "solver.max_iterations");
  EXPECT_EQ(parse_error("domain.h = -0.1\n").key(), "domain");
  EXPECT_EQ(parse_error("domain.preset = square9\nboundary.coeffs = 1\n").key(), "boundary.coeffs");
}

TEST(ParseConfig, QMustExceedDimensionOverAlpha) {
  const auto e = parse_error("command = sweep-p\nkernel.alpha = 0.25\nsweep.q = 4\n");
  EXPECT_EQ(e.key(), "sweep.q");
  EXPECT_EQ(e.line(), 3u);
  EXPECT_NO_THROW(parse_config("command = sweep-p\nkernel.alpha = 0.25\nsweep.q = 4.5\n"));
  EXPECT_NO_THROW(parse_config("command = solve\nkernel.alpha = 0.25\nsweep.q = 4\n"));
}

TEST(ParseConfig, SSchedules) {
  EXPECT_NO_THROW(parse_config("command = sweep-s-above\nschedule.s = 0.9,0.7,0.5\n"));
  EXPECT_EQ(parse_error("command = sweep-s-above\nschedule.s = 0.7,0.9\n").key(), "schedule.s");
  EXPECT_EQ(parse_error("command = sweep-s-above\nschedule.s = 0.9,0.4\n").key(), "schedule.s");
  EXPECT_EQ(parse_error("command = sweep-s-above\n").key(), "schedule.s");
  EXPECT_NO_THROW(parse_config("command = sweep-s-below\nschedule.s = 0.1,0.3,0.5\n"));
  EXPECT_EQ(parse_error("command = sweep-s-below\nschedule.s = 0.3,0.1\n").key(), "schedule.s");
  EXPECT_EQ(parse_error("command = sweep-s-below\nschedule.s = 0.3,0.6\n").key(), "schedule.s");
}

TEST(ParseConfig, MissingFieldFile) {
  const auto e = parse_error("field.kind = file\nfield.file = /nonexistent/field.csv\n");
  EXPECT_EQ(e.key(), "field.file");
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(parse_error("field.kind = file\n").key(), "field.file");
}

TEST(ParseConfig, Overrides) {
  ConfigOverrides o;
  o.command = Command::Infinity;
  o.output_dir = "elsewhere";
  o.seed = 77;
  const auto c = parse_config("output_dir = here\nseed = 3\n", o);
  EXPECT_EQ(c.command, Command::Infinity);
  EXPECT_EQ(c.output_dir, "elsewhere");
  EXPECT_EQ(c.seed, 77u);
  EXPECT_EQ(parse_config("command = infinity\n", o).command, Command::Infinity);
  const auto e = parse_error("command = solve\n", o);
  EXPECT_EQ(e.key(), "command");
}

TEST(ParseCommand, Names) {
  for (Command c : {Command::Solve, Command::Infinity, Command::SweepP, Command::SweepSAbove,
                    Command::SweepSBelow, Command::VerifyGamma, Command::Oracle}) {
    EXPECT_EQ(parse_command(to_string(c)), c);
  }
  EXPECT_FALSE(parse_command("sweep_p").has_value());
}

TEST(Serialize, RoundTrip) {
  const std::vector<std::string> docs = {
      "",
      "command = sweep-p\ndomain.preset = square9\nboundary.coeffs = 1,0.5\nkernel.alpha = 1\n"
      "schedule.p = 4,16,64\nsweep.q = 3\ncompat.competitors = 12\n",
      "command = sweep-s-above\nproblem = forced\nkernel.s = 0.8\nkernel.p = 3\n"
      "schedule.s = 0.8,0.6,0.51\nforce.kind = constant\nforce.value = 0.1\nseed = 123456789012\n",
      "command = sweep-s-below\ndomain.preset = disk\nschedule.s = 0.2,0.3\nsweep.s_target = 0.3\n"
      "sweep.gap_ratio = 0.1\nsweep.test_fields = 4\n",
      "command = verify-gamma\ndomain.shape = box\ndomain.lo = 0,0\ndomain.hi = 2,1\n"
      "domain.h = 0.3333333333333333\nfield.kind = bump\nboundary.coeffs = 0.1,0.2\n"
      "boundary.offset = -1\n",
      "command = oracle\ndomain.shape = interval\ndomain.lo = 0\ndomain.hi = 1\ndomain.h = 0.2\n"
      "boundary.kind = values\nboundary.values = 0,1\nsolver.step = fixed\nsolver.eta = 0.01\n"
      "solver.precondition = false\nsolver.trace = true\ninfinity.tolerance = 1e-10\n",
  };
  for (const auto& doc : docs) {
    const auto c = parse_config(doc);
    const auto text = serialize(c);
    EXPECT_EQ(parse_config(text), c) << text;
    EXPECT_EQ(serialize(parse_config(text)), text);
  }
}

TEST(Serialize, ExplicitShapeInsteadOfPreset) {
  const auto text = serialize(parse_config("domain.preset = interval33\n"));
  EXPECT_EQ(text.find("preset"), std::string::npos);
  EXPECT_NE(text.find("domain.shape = interval"), std::string::npos);
}
