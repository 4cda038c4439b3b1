#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "atomplane/errors.hpp"
#include "atomplane/grid.hpp"

namespace atomplane {

namespace detail {
inline std::string fmt_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

// Bit-authoritative scalar-field format: two header comment rows then
// row-major values, one grid row per line.
//   # pitch_m=<v>
//   # unit=<unit>
inline void write_field_csv(std::ostream& out, const ScalarField& f, const std::string& unit) {
  const Grid2D& g = f.grid();
  out << "# pitch_m=" << detail::fmt_full(g.pitch) << "\n";
  out << "# unit=" << unit << "\n";
  out << "# nx=" << g.nx << " ny=" << g.ny
      << " origin_x_m=" << detail::fmt_full(g.origin_x)
      << " origin_y_m=" << detail::fmt_full(g.origin_y) << "\n";
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i) out << ',';
      out << detail::fmt_full(f(i, j));
    }
    out << '\n';
  }
}

inline void write_field_csv_file(const std::string& path, const ScalarField& f, const std::string& unit) {
  std::ofstream o(path);
  if (!o) throw FormatError("csv: cannot open " + path + " for writing");
  write_field_csv(o, f, unit);
}

struct FieldCsv {
  ScalarField field;
  std::string unit;
};

inline FieldCsv read_field_csv(std::istream& in) {
  std::string line;
  double pitch = 0.0, ox = 0.0, oy = 0.0;
  int nx = -1, ny = -1;
  std::string unit = "unknown";
  std::vector<double> values;
  int rows = 0, cols = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string kv;
      while (hs >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "pitch_m") pitch = std::stod(val);
        else if (key == "unit") unit = val;
        else if (key == "nx") nx = std::stoi(val);
        else if (key == "ny") ny = std::stoi(val);
        else if (key == "origin_x_m") ox = std::stod(val);
        else if (key == "origin_y_m") oy = std::stod(val);
      }
      continue;
    }
    int c = 0;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw FormatError("csv: bad numeric cell '" + cell + "'");
      }
      ++c;
    }
    if (cols < 0) cols = c;
    else if (c != cols) throw FormatError("csv: ragged rows");
    ++rows;
  }
  if (!(pitch > 0.0)) throw FormatError("csv: missing or invalid pitch_m header");
  if (rows == 0 || cols <= 0) throw FormatError("csv: no data rows");
  if (nx >= 0 && (nx != cols || ny != rows)) throw FormatError("csv: header/body size mismatch");
  Grid2D g(cols, rows, pitch, ox, oy);
  FieldCsv out{ScalarField(g), unit};
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) out.field(i, j) = values[static_cast<std::size_t>(j) * cols + i];
  return out;
}

inline FieldCsv read_field_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("csv: cannot open " + path);
  return read_field_csv(f);
}

// Time-series trace: "t_s,<name>" header then rows.
inline void write_trace_csv_file(const std::string& path, const std::string& value_name,
                                 const std::vector<std::pair<double, double>>& samples) {
  std::ofstream o(path);
  if (!o) throw FormatError("csv: cannot open " + path + " for writing");
  o << "t_s," << value_name << "\n";
  for (const auto& [t, v] : samples) o << detail::fmt_full(t) << ',' << detail::fmt_full(v) << '\n';
}

inline std::vector<std::pair<double, double>> read_trace_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("csv: cannot open " + path);
  std::string line;
  std::vector<std::pair<double, double>> out;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first) {  // header
      first = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("csv: bad trace row");
    out.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace atomplane
