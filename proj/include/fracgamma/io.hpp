#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracgamma/energy.hpp"
#include "fracgamma/error.hpp"
#include "fracgamma/field.hpp"
#include "fracgamma/geometry.hpp"
#include "fracgamma/harness.hpp"
#include "fracgamma/infinity.hpp"
#include "fracgamma/solver.hpp"

namespace fracgamma::io {

/// 17 significant digits; "inf", "-inf", "nan" for non-finite values.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// `{log_sum, root_value, raw_value|inf}`
inline std::string format_energy(const EnergyValue& e) {
  return "{" + format_double(e.log_sum) + ", " + format_double(e.root_value) + ", " +
         (e.raw_finite() ? format_double(e.raw_value) : std::string("inf")) + "}";
}

/// Header `x0,...,x{N-1},weight,role`, plus a `u` column when a field is given.
inline void write_cloud_csv(std::ostream& os, const NodeCloud& cloud,
                            const ScalarField* field = nullptr) {
  if (field != nullptr) detail::require_size(*field, cloud.size(), "field");
  for (std::size_t a = 0; a < cloud.dimension(); ++a) os << 'x' << a << ',';
  os << "weight,role";
  if (field != nullptr) os << ",u";
  os << '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t a = 0; a < cloud.dimension(); ++a) os << format_double(cloud.coord(i, a)) << ',';
    os << format_double(cloud.weight(i)) << ',' << to_string(cloud.role(i));
    if (field != nullptr) os << ',' << format_double((*field)[i]);
    os << '\n';
  }
}

struct CloudWithField {
  NodeCloud cloud;
  std::optional<ScalarField> field;
};

inline CloudWithField read_cloud_csv(std::istream& is) {
  std::string line;
  detail::require(static_cast<bool>(std::getline(is, line)), ErrorKind::Io, "empty cloud CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  std::size_t dim = 0;
  while (dim < header.size() && header[dim] == "x" + std::to_string(dim)) ++dim;
  detail::require(dim >= 1 && header.size() >= dim + 2 && header[dim] == "weight" &&
                      header[dim + 1] == "role",
                  ErrorKind::Io, "unexpected cloud CSV header: " + line);
  const bool has_field = header.size() == dim + 3 && header[dim + 2] == "u";
  detail::require(has_field || header.size() == dim + 2, ErrorKind::Io,
                  "unexpected cloud CSV header: " + line);

  std::vector<double> coords, weights, values;
  std::vector<NodeRole> roles;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    detail::require(cells.size() == header.size(), ErrorKind::Io,
                    "line " + std::to_string(line_no) + ": wrong number of columns");
    auto number = [&](std::size_t c) {
      const auto v = parse_double(cells[c]);
      detail::require(v.has_value(), ErrorKind::Io,
                      "line " + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
      return *v;
    };
    for (std::size_t a = 0; a < dim; ++a) coords.push_back(number(a));
    weights.push_back(number(dim));
    const auto& role = cells[dim + 1];
    if (role == "interior") {
      roles.push_back(NodeRole::Interior);
    } else if (role == "boundary") {
      roles.push_back(NodeRole::Boundary);
    } else if (role == "exterior") {
      roles.push_back(NodeRole::Exterior);
    } else {
      throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": bad role '" + role + "'");
    }
    if (has_field) values.push_back(number(dim + 2));
  }
  CloudWithField out{NodeCloud(dim, std::move(coords), std::move(weights), std::move(roles)),
                     std::nullopt};
  if (has_field) out.field = ScalarField(std::move(values));
  return out;
}

inline void write_report_csv(std::ostream& os, const GammaReport& report) {
  for (const auto& c : report.columns) os << c << ',';
  os << "status\n";
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    for (double v : report.rows[r]) os << format_double(v) << ',';
    os << report.status[r] << '\n';
  }
}

/// One CSV row; wall time is deliberately not serialized.
inline void write_solve_report_csv(std::ostream& os, const SolveReport& r) {
  os << "status,iterations,log_sum,root_value,raw_value,objective,scaled_grad_norm\n";
  os << to_string(r.status) << ',' << r.iterations << ',' << format_double(r.final_energy.log_sum)
     << ',' << format_double(r.final_energy.root_value) << ','
     << (r.final_energy.raw_finite() ? format_double(r.final_energy.raw_value) : "inf") << ','
     << format_double(r.objective) << ',' << format_double(r.scaled_grad_norm) << '\n';
}

inline void write_residual_csv(std::ostream& os, const ResidualReport& r) {
  os << "node_index,residual\n";
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    os << r.nodes[k] << ',' << format_double(r.residuals[k]) << '\n';
  }
}

inline void write_trace_header(std::ostream& os) {
  os << "iteration,objective,scaled_grad_norm,step\n";
}

inline void write_trace_row(std::ostream& os, const TraceEntry& e) {
  os << e.iteration << ',' << format_double(e.objective) << ',' << format_double(e.scaled_grad_norm)
     << ',' << format_double(e.step) << '\n';
}

/// `KEY=PASS|FAIL margin=<value>` lines.
inline void write_summary(std::ostream& os, const GammaReport& report) {
  for (const auto& f : report.summary) {
    os << f.key << '=' << (f.pass ? "PASS" : "FAIL") << " margin=" << format_double(f.margin)
       << '\n';
  }
}

}  // namespace fracgamma::io
