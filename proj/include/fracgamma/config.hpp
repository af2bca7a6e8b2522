#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fracgamma/error.hpp"
#include "fracgamma/geometry.hpp"
#include "fracgamma/io.hpp"

namespace fracgamma {

enum class Command { Solve, Infinity, SweepP, SweepSAbove, SweepSBelow, VerifyGamma, Oracle };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Infinity: return "infinity";
    case Command::SweepP: return "sweep-p";
    case Command::SweepSAbove: return "sweep-s-above";
    case Command::SweepSBelow: return "sweep-s-below";
    case Command::VerifyGamma: return "verify-gamma";
    case Command::Oracle: return "oracle";
  }
  return "?";
}

inline std::optional<Command> parse_command(std::string_view name) {
  for (auto c : {Command::Solve, Command::Infinity, Command::SweepP, Command::SweepSAbove,
                 Command::SweepSBelow, Command::VerifyGamma, Command::Oracle}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

enum class ProblemKind { Dirichlet, Forced };
/// linear: g(x) = offset + sum_a coeffs[a] x_a; values: one entry per Boundary node in node order.
enum class BoundaryKind { Linear, Constant, Values };
enum class ForceKind { Zero, Constant, Smooth };
enum class FieldKind { Constant, Linear, Random, Bump, File };
enum class StepKind { Armijo, Fixed };

struct SolverSettings {
  std::size_t max_iterations = 200000;
  double grad_tolerance = 1e-8;
  StepKind step = StepKind::Armijo;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double eta = 1.0;
  double stall_tolerance = 1e-15;
  bool precondition = true;
  bool trace = false;

  bool operator==(const SolverSettings&) const = default;
};

/// Fully defaulted experiment description. Presets are expanded into `domain`
/// at parse time, so serialize() always writes the explicit shape.
struct RunConfig {
  Command command = Command::Solve;
  DomainSpec domain{Interval{0.0, 1.0}, 1.0 / 16.0};
  double enclosure_factor = 2.0;

  ProblemKind problem = ProblemKind::Dirichlet;
  double alpha = 0.5;
  double p = 2.0;
  double s = 0.5;

  BoundaryKind boundary = BoundaryKind::Linear;
  std::vector<double> boundary_coeffs{1.0};
  double boundary_offset = 0.0;
  double boundary_value = 0.0;
  std::vector<double> boundary_values;

  ForceKind force = ForceKind::Smooth;
  double force_value = 1.0;

  FieldKind field = FieldKind::Random;
  double field_value = 0.0;
  std::string field_file;

  std::vector<double> schedule_p{8, 16, 32, 64, 128, 256, 512};
  std::vector<double> schedule_s;
  double q = 16.0;
  double s_target = 0.5;
  double gap_ratio = 0.25;
  double sup_gap_tolerance = 0.05;
  double liminf_tolerance = 0.05;
  std::size_t test_fields = 25;
  std::size_t competitors = 0;

  SolverSettings solver;
  double infinity_tolerance = 1e-13;

  std::string output_dir = "out";
  std::uint64_t seed = 1;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

struct Preset {
  const char* name;
  DomainSpec spec;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"interval17", {Interval{0.0, 1.0}, 1.0 / 16.0}},
      {"interval33", {Interval{0.0, 1.0}, 1.0 / 32.0}},
      {"interval65", {Interval{0.0, 1.0}, 1.0 / 64.0}},
      {"square9", {Box{{0.0, 0.0}, {1.0, 1.0}}, 1.0 / 8.0}},
      {"disk", {Disk{{0.0, 0.0}, 1.0}, 0.25}},
  };
  return table;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    out += io::format_double(v[k]);
  }
  return out;
}

class Entries {
 public:
  struct Entry {
    std::string value;
    std::size_t line;
    bool used = false;
  };

  void add(const std::string& key, std::string value, std::size_t line) {
    if (map_.count(key)) throw ConfigError("duplicate key '" + key + "'", line, key);
    map_[key] = {std::move(value), line};
  }

  const Entry* find(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::size_t line_of(const std::string& key) const {
    auto it = map_.find(key);
    return it == map_.end() ? 0 : it->second.line;
  }

  void real(const std::string& key, double& out) {
    if (const auto* e = find(key)) {
      const auto v = io::parse_double(e->value);
      if (!v) throw ConfigError("'" + key + "' expects a number, got '" + e->value + "'", e->line, key);
      out = *v;
    }
  }

  void count(const std::string& key, std::size_t& out) {
    if (const auto* e = find(key)) {
      const auto v = io::parse_double(e->value);
      if (!v || *v < 0 || std::floor(*v) != *v) {
        throw ConfigError("'" + key + "' expects a non-negative integer", e->line, key);
      }
      out = static_cast<std::size_t>(*v);
    }
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const auto* e = find(key)) {
      const char* first = e->value.data();
      const char* last = first + e->value.size();
      const auto [ptr, ec] = std::from_chars(first, last, out);
      if (ec != std::errc() || ptr != last || first == last) {
        throw ConfigError("'" + key + "' expects a non-negative integer", e->line, key);
      }
    }
  }

  void list(const std::string& key, std::vector<double>& out) {
    if (const auto* e = find(key)) {
      out.clear();
      if (e->value.empty()) return;
      for (const auto& cell : io::split(e->value, ',')) {
        const auto v = io::parse_double(cell);
        if (!v) throw ConfigError("'" + key + "' expects a comma-separated list of numbers", e->line, key);
        out.push_back(*v);
      }
    }
  }

  void flag(const std::string& key, bool& out) {
    if (const auto* e = find(key)) {
      if (e->value == "true") {
        out = true;
      } else if (e->value == "false") {
        out = false;
      } else {
        throw ConfigError("'" + key + "' expects true or false", e->line, key);
      }
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const auto* e = find(key)) out = e->value;
  }

  template <class Enum>
  void choice(const std::string& key, Enum& out,
              std::initializer_list<std::pair<const char*, Enum>> options) {
    if (const auto* e = find(key)) {
      for (const auto& [name, value] : options) {
        if (e->value == name) {
          out = value;
          return;
        }
      }
      std::string names;
      for (const auto& [name, value] : options) names += std::string(names.empty() ? "" : "|") + name;
      throw ConfigError("'" + key + "' must be one of " + names + ", got '" + e->value + "'",
                        e->line, key);
    }
  }

  void reject_unused() const {
    for (const auto& [key, e] : map_) {
      if (!e.used) throw ConfigError("unknown key '" + key + "'", e.line, key);
    }
  }

 private:
  std::map<std::string, Entry> map_;
};

inline void check(bool ok, const Entries& entries, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("'" + key + "': " + what, entries.line_of(key), key);
}

inline void validate(const RunConfig& c, const Entries& e) {
  try {
    validate(c.domain);
  } catch (const Error& err) {
    throw ConfigError(err.what(), e.line_of("domain.shape"), "domain");
  }
  check(c.enclosure_factor > 1.0, e, "domain.t", "enclosure factor must exceed 1");
  check(c.alpha > 0.0 && c.alpha <= 1.0, e, "kernel.alpha", "alpha must lie in (0, 1]");
  check(c.p > 1.0 && std::isfinite(c.p), e, "kernel.p", "p must exceed 1");
  check(c.s > 0.0 && c.s < 1.0, e, "kernel.s", "s must lie in (0, 1)");
  check(c.q >= 1.0, e, "sweep.q", "q must be at least 1");
  check(c.infinity_tolerance > 0.0, e, "infinity.tolerance", "tolerance must be positive");
  check(c.solver.grad_tolerance > 0.0, e, "solver.grad_tolerance", "must be positive");
  check(c.solver.stall_tolerance > 0.0, e, "solver.stall_tolerance", "must be positive");
  check(c.solver.max_iterations > 0, e, "solver.max_iterations", "must be positive");
  check(c.solver.armijo_c > 0.0 && c.solver.armijo_c < 1.0, e, "solver.armijo_c", "must lie in (0, 1)");
  check(c.solver.shrink > 0.0 && c.solver.shrink < 1.0, e, "solver.shrink", "must lie in (0, 1)");
  check(c.solver.eta > 0.0, e, "solver.eta", "must be positive");
  check(c.boundary != BoundaryKind::Linear || c.boundary_coeffs.size() == c.domain.dimension(), e,
        "boundary.coeffs", "needs one coefficient per axis");
  if (c.field == FieldKind::File) {
    check(!c.field_file.empty() && std::filesystem::exists(c.field_file), e, "field.file",
          "file does not exist: " + c.field_file);
  }

  const auto& ps = c.schedule_p;
  const auto& ss = c.schedule_s;
  switch (c.command) {
    case Command::SweepP:
    case Command::VerifyGamma:
      check(!ps.empty(), e, "schedule.p", "schedule must not be empty");
      for (std::size_t k = 0; k < ps.size(); ++k) {
        check(ps[k] > 1.0, e, "schedule.p", "exponents must exceed 1");
        check(k == 0 || ps[k] > ps[k - 1], e, "schedule.p", "schedule must be strictly increasing");
      }
      if (c.command == Command::SweepP) {
        check(c.q > static_cast<double>(c.domain.dimension()) / c.alpha, e, "sweep.q",
              "q must exceed N/alpha");
      }
      break;
    case Command::SweepSAbove:
      check(!ss.empty(), e, "schedule.s", "schedule must not be empty");
      check(c.s_target > 0.0 && c.s_target < 1.0, e, "sweep.s_target", "must lie in (0, 1)");
      for (std::size_t k = 0; k < ss.size(); ++k) {
        check(ss[k] >= c.s_target && ss[k] < 1.0, e, "schedule.s",
              "entries must lie in [s_target, 1)");
        check(k == 0 || ss[k] < ss[k - 1], e, "schedule.s", "schedule must be strictly decreasing");
      }
      break;
    case Command::SweepSBelow:
      check(!ss.empty(), e, "schedule.s", "schedule must not be empty");
      check(c.s_target > 0.0 && c.s_target < 1.0, e, "sweep.s_target", "must lie in (0, 1)");
      for (std::size_t k = 0; k < ss.size(); ++k) {
        check(ss[k] > 0.0 && ss[k] <= c.s_target, e, "schedule.s",
              "entries must lie in (0, s_target]");
        check(k == 0 || ss[k] > ss[k - 1], e, "schedule.s", "schedule must be strictly increasing");
      }
      break;
    default: break;
  }
}

}  // namespace detail

/// Command-line values that take precedence over the document.
struct ConfigOverrides {
  std::optional<Command> command;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
};

/// Parses a flat `key = value` document with dotted sections. `#` starts a
/// comment. Unknown and duplicate keys are errors.
inline RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {}) {
  detail::Entries entries;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    entries.add(key, detail::trim(std::string_view(body).substr(eq + 1)), line_no);
  }

  RunConfig c;
  if (const auto* e = entries.find("command")) {
    const auto cmd = parse_command(e->value);
    if (!cmd) throw ConfigError("unknown command '" + e->value + "'", e->line, "command");
    if (overrides.command && *overrides.command != *cmd) {
      throw ConfigError(std::string("config declares command '") + e->value +
                            "' but '" + to_string(*overrides.command) + "' was requested",
                        e->line, "command");
    }
    c.command = *cmd;
  }
  if (overrides.command) c.command = *overrides.command;

  // Domain: a preset, or an explicit shape.
  std::string preset;
  entries.text("domain.preset", preset);
  if (!preset.empty()) {
    bool found = false;
    for (const auto& pr : detail::presets()) {
      if (preset == pr.name) {
        c.domain = pr.spec;
        found = true;
      }
    }
    if (!found) {
      throw ConfigError("unknown preset '" + preset + "'", entries.line_of("domain.preset"),
                        "domain.preset");
    }
  }
  std::string shape;
  entries.text("domain.shape", shape);
  std::vector<double> lo, hi, center;
  double radius = 1.0;
  entries.list("domain.lo", lo);
  entries.list("domain.hi", hi);
  entries.list("domain.center", center);
  entries.real("domain.radius", radius);
  entries.real("domain.h", c.domain.resolution);
  if (!shape.empty()) {
    const auto line = entries.line_of("domain.shape");
    if (shape == "interval") {
      if (lo.size() != 1 || hi.size() != 1) {
        throw ConfigError("interval needs scalar domain.lo and domain.hi", line, "domain.lo");
      }
      c.domain.shape = Interval{lo[0], hi[0]};
    } else if (shape == "box") {
      c.domain.shape = Box{lo, hi};
    } else if (shape == "disk") {
      c.domain.shape = Disk{center, radius};
    } else {
      throw ConfigError("domain.shape must be interval|box|disk", line, "domain.shape");
    }
  }
  entries.real("domain.t", c.enclosure_factor);

  entries.choice("problem", c.problem,
                 {{"dirichlet", ProblemKind::Dirichlet}, {"forced", ProblemKind::Forced}});
  entries.real("kernel.alpha", c.alpha);
  entries.real("kernel.p", c.p);
  entries.real("kernel.s", c.s);

  entries.choice("boundary.kind", c.boundary,
                 {{"linear", BoundaryKind::Linear},
                  {"constant", BoundaryKind::Constant},
                  {"values", BoundaryKind::Values}});
  if (c.domain.dimension() != c.boundary_coeffs.size()) {
    c.boundary_coeffs.assign(c.domain.dimension(), 0.0);
    c.boundary_coeffs[0] = 1.0;
  }
  entries.list("boundary.coeffs", c.boundary_coeffs);
  entries.real("boundary.offset", c.boundary_offset);
  entries.real("boundary.value", c.boundary_value);
  entries.list("boundary.values", c.boundary_values);

  entries.choice("force.kind", c.force,
                 {{"zero", ForceKind::Zero}, {"constant", ForceKind::Constant},
                  {"smooth", ForceKind::Smooth}});
  entries.real("force.value", c.force_value);

  entries.choice("field.kind", c.field,
                 {{"constant", FieldKind::Constant},
                  {"linear", FieldKind::Linear},
                  {"random", FieldKind::Random},
                  {"bump", FieldKind::Bump},
                  {"file", FieldKind::File}});
  entries.real("field.value", c.field_value);
  entries.text("field.file", c.field_file);

  entries.list("schedule.p", c.schedule_p);
  entries.list("schedule.s", c.schedule_s);
  entries.real("sweep.q", c.q);
  entries.real("sweep.s_target", c.s_target);
  entries.real("sweep.gap_ratio", c.gap_ratio);
  entries.real("sweep.sup_gap_tolerance", c.sup_gap_tolerance);
  entries.real("sweep.liminf_tolerance", c.liminf_tolerance);
  entries.count("sweep.test_fields", c.test_fields);
  entries.count("compat.competitors", c.competitors);

  entries.count("solver.max_iterations", c.solver.max_iterations);
  entries.real("solver.grad_tolerance", c.solver.grad_tolerance);
  entries.choice("solver.step", c.solver.step,
                 {{"armijo", StepKind::Armijo}, {"fixed", StepKind::Fixed}});
  entries.real("solver.armijo_c", c.solver.armijo_c);
  entries.real("solver.shrink", c.solver.shrink);
  entries.real("solver.eta", c.solver.eta);
  entries.real("solver.stall_tolerance", c.solver.stall_tolerance);
  entries.flag("solver.precondition", c.solver.precondition);
  entries.flag("solver.trace", c.solver.trace);
  entries.real("infinity.tolerance", c.infinity_tolerance);

  entries.text("output_dir", c.output_dir);
  entries.seed("seed", c.seed);
  if (overrides.output_dir) c.output_dir = *overrides.output_dir;
  if (overrides.seed) c.seed = *overrides.seed;

  entries.reject_unused();
  detail::validate(c, entries);
  return c;
}

/// Writes every field explicitly; parse_config(serialize(c)) == c.
inline std::string serialize(const RunConfig& c) {
  std::ostringstream os;
  const auto f = [](double x) { return io::format_double(x); };
  os << "command = " << to_string(c.command) << '\n';
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Interval>) {
          os << "domain.shape = interval\ndomain.lo = " << f(s.a) << "\ndomain.hi = " << f(s.b)
             << '\n';
        } else if constexpr (std::is_same_v<S, Box>) {
          os << "domain.shape = box\ndomain.lo = " << detail::join(s.lo)
             << "\ndomain.hi = " << detail::join(s.hi) << '\n';
        } else {
          os << "domain.shape = disk\ndomain.center = " << detail::join(s.center)
             << "\ndomain.radius = " << f(s.radius) << '\n';
        }
      },
      c.domain.shape);
  os << "domain.h = " << f(c.domain.resolution) << '\n';
  os << "domain.t = " << f(c.enclosure_factor) << '\n';
  os << "problem = " << (c.problem == ProblemKind::Dirichlet ? "dirichlet" : "forced") << '\n';
  os << "kernel.alpha = " << f(c.alpha) << '\n';
  os << "kernel.p = " << f(c.p) << '\n';
  os << "kernel.s = " << f(c.s) << '\n';
  const char* bkind[] = {"linear", "constant", "values"};
  os << "boundary.kind = " << bkind[static_cast<int>(c.boundary)] << '\n';
  os << "boundary.coeffs = " << detail::join(c.boundary_coeffs) << '\n';
  os << "boundary.offset = " << f(c.boundary_offset) << '\n';
  os << "boundary.value = " << f(c.boundary_value) << '\n';
  os << "boundary.values = " << detail::join(c.boundary_values) << '\n';
  const char* fkind[] = {"zero", "constant", "smooth"};
  os << "force.kind = " << fkind[static_cast<int>(c.force)] << '\n';
  os << "force.value = " << f(c.force_value) << '\n';
  const char* field_kind[] = {"constant", "linear", "random", "bump", "file"};
  os << "field.kind = " << field_kind[static_cast<int>(c.field)] << '\n';
  os << "field.value = " << f(c.field_value) << '\n';
  os << "field.file = " << c.field_file << '\n';
  os << "schedule.p = " << detail::join(c.schedule_p) << '\n';
  os << "schedule.s = " << detail::join(c.schedule_s) << '\n';
  os << "sweep.q = " << f(c.q) << '\n';
  os << "sweep.s_target = " << f(c.s_target) << '\n';
  os << "sweep.gap_ratio = " << f(c.gap_ratio) << '\n';
  os << "sweep.sup_gap_tolerance = " << f(c.sup_gap_tolerance) << '\n';
  os << "sweep.liminf_tolerance = " << f(c.liminf_tolerance) << '\n';
  os << "sweep.test_fields = " << c.test_fields << '\n';
  os << "compat.competitors = " << c.competitors << '\n';
  os << "solver.max_iterations = " << c.solver.max_iterations << '\n';
  os << "solver.grad_tolerance = " << f(c.solver.grad_tolerance) << '\n';
  os << "solver.step = " << (c.solver.step == StepKind::Armijo ? "armijo" : "fixed") << '\n';
  os << "solver.armijo_c = " << f(c.solver.armijo_c) << '\n';
  os << "solver.shrink = " << f(c.solver.shrink) << '\n';
  os << "solver.eta = " << f(c.solver.eta) << '\n';
  os << "solver.stall_tolerance = " << f(c.solver.stall_tolerance) << '\n';
  os << "solver.precondition = " << (c.solver.precondition ? "true" : "false") << '\n';
  os << "solver.trace = " << (c.solver.trace ? "true" : "false") << '\n';
  os << "infinity.tolerance = " << f(c.infinity_tolerance) << '\n';
  os << "output_dir = " << c.output_dir << '\n';
  os << "seed = " << c.seed << '\n';
  return os.str();
}

}  // namespace fracgamma
