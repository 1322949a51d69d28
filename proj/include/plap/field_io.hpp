#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plap/flow.hpp"
#include "plap/grid.hpp"

namespace plap {

/// Shortest round-trip decimal form of a double (17 significant digits),
/// identical bytes for identical values.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// One row per cell in row-major order, header `x,value` or `x,y,value`.
inline void write_field_csv(std::ostream& out, const Field& f) {
  const Grid& g = f.grid;
  if (g.dim == 1) {
    out << "x,value\n";
    for (Eigen::Index i = 0; i < g.cells[0]; ++i)
      out << format_real(g.center(0, i)) << ',' << format_real(f.values[i])
          << '\n';
    return;
  }
  out << "x,y,value\n";
  for (Eigen::Index iy = 0; iy < g.cells[1]; ++iy)
    for (Eigen::Index ix = 0; ix < g.cells[0]; ++ix)
      out << format_real(g.center(0, ix)) << ',' << format_real(g.center(1, iy))
          << ',' << format_real(f.values[g.cell_index(ix, iy)]) << '\n';
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_csv_real(const std::string& token, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(token, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("field csv: malformed number '" + token +
                             "' on line " + std::to_string(line_no));
  }
  if (pos != token.size() || !std::isfinite(v))
    throw std::runtime_error("field csv: malformed number '" + token +
                             "' on line " + std::to_string(line_no));
  return v;
}
}  // namespace detail

/// Reads a field written by write_field_csv back onto `g`. The row count and
/// column layout must match the grid; values must be finite.
inline Field read_field_csv(std::istream& in, const Grid& g) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("field csv: missing header");
  const std::string expected = g.dim == 1 ? "x,value" : "x,y,value";
  {
    std::string stripped = line;
    if (!stripped.empty() && stripped.back() == '\r') stripped.pop_back();
    if (stripped != expected)
      throw std::runtime_error("field csv: expected header '" + expected +
                               "', got '" + stripped + "'");
  }
  Field f = Field::zero(g);
  Eigen::Index row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (row >= g.cell_count())
      throw std::runtime_error("field csv: more rows than grid cells");
    const auto tokens = detail::split_csv_line(line);
    if (static_cast<int>(tokens.size()) != g.dim + 1)
      throw std::runtime_error("field csv: wrong column count on line " +
                               std::to_string(line_no));
    f.values[row] = detail::parse_csv_real(tokens.back(), line_no);
    ++row;
  }
  if (row != g.cell_count())
    throw std::runtime_error("field csv: expected " +
                             std::to_string(g.cell_count()) + " rows, got " +
                             std::to_string(row));
  return f;
}

/// Full path export, columns `k,t,cell_index,value`.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "k,t,cell_index,value\n";
  for (std::size_t k = 0; k < traj.fields.size(); ++k) {
    const std::string t = format_real(traj.tg.node(static_cast<int>(k)));
    const auto& v = traj.fields[k].values;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      out << k << ',' << t << ',' << i << ',' << format_real(v[i]) << '\n';
  }
}

}  // namespace plap
