#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "copula.hpp"
#include "error.hpp"
#include "sample.hpp"

namespace cfcopula {

/// Headered CSV as strings. Quoted fields may contain commas and doubled
/// quotes; fields do not span lines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  bool has(std::string_view name) const { return std::find(header.begin(), header.end(), name) != header.end(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      // UTF-8 byte order mark
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      for (auto& h : detail::split_csv_line(line)) t.header.emplace_back(detail::trim(h));
      first = false;
      continue;
    }
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw DataError("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (first) throw DataError("CSV input is empty");
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

inline double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
  auto s = detail::trim(cell);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError("non-numeric value '" + std::string(cell) + "' at row " + std::to_string(row) + ", column " +
                    std::string(column));
  return v;
}

/// Numeric column; rows are numbered from 1 after the header.
inline std::vector<double> numeric_column(const CsvTable& t, std::string_view name) {
  const std::size_t c = t.column(name);
  std::vector<double> v(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) v[r] = parse_number(t.rows[r][c], r + 1, name);
  return v;
}

/// Column roles for ingest. Without xstar columns, x* starts as a copy of x
/// (for a scenario to transform).
struct Schema {
  std::string y1;
  std::string y2;
  std::vector<std::string> x;
  std::vector<std::string> discrete;  // subset of x
  std::vector<std::string> xstar;     // empty or parallel to x
};

struct Ingested {
  ObservationSample sample;
  std::vector<SupportViolation> support_warnings;
};

inline ObservationSample sample_from_table(const CsvTable& t, const Schema& schema) {
  if (schema.y1.empty() || schema.y2.empty()) throw UsageError("outcome columns y1 and y2 must be named");
  if (schema.x.empty()) throw UsageError("at least one covariate column is required");
  if (!schema.xstar.empty() && schema.xstar.size() != schema.x.size())
    throw UsageError("xstar columns must parallel the x columns");
  for (const auto& d : schema.discrete)
    if (std::find(schema.x.begin(), schema.x.end(), d) == schema.x.end())
      throw UsageError("discrete column '" + d + "' is not a covariate");

  ObservationSample s;
  s.y1 = numeric_column(t, schema.y1);
  s.y2 = numeric_column(t, schema.y2);
  const std::size_t n = s.y1.size(), d = schema.x.size();
  s.x.resize(n * d);
  s.xstar.resize(n * d);
  s.x_names = schema.x;
  for (std::size_t c = 0; c < d; ++c) {
    auto col = numeric_column(t, schema.x[c]);
    auto star = schema.xstar.empty() ? col : numeric_column(t, schema.xstar[c]);
    for (std::size_t i = 0; i < n; ++i) {
      s.x[i * d + c] = col[i];
      s.xstar[i * d + c] = star[i];
    }
    s.discrete.push_back(std::find(schema.discrete.begin(), schema.discrete.end(), schema.x[c]) !=
                         schema.discrete.end());
  }
  s.validate();
  return s;
}

inline Ingested ingest(const std::filesystem::path& path, const Schema& schema) {
  Ingested out;
  out.sample = sample_from_table(read_csv(path), schema);
  out.support_warnings = support_violations(out.sample);
  return out;
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
  for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(out, t);
}

/// Long-format grid: one (u1, u2, value) line per node.
inline void write_grid_csv(std::ostream& out, const CopulaGrid& g) {
  out << "u1,u2,value\n";
  for (std::size_t i = 0; i <= g.m; ++i)
    for (std::size_t j = 0; j <= g.m; ++j)
      out << format_double(g.node(i)) << ',' << format_double(g.node(j)) << ',' << format_double(g.at(i, j))
          << '\n';
}

inline void write_grid_csv(const std::filesystem::path& path, const CopulaGrid& g) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_grid_csv(out, g);
}

inline CopulaGrid read_grid_csv(std::istream& in) {
  CsvTable t = read_csv(in);
  auto u1 = numeric_column(t, "u1");
  auto u2 = numeric_column(t, "u2");
  auto v = numeric_column(t, "value");
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (side < 2 || side * side != v.size()) throw DataError("grid file does not hold a square grid");
  CopulaGrid g(side - 1);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto i = static_cast<std::size_t>(std::llround(u1[k] * static_cast<double>(g.m)));
    const auto j = static_cast<std::size_t>(std::llround(u2[k] * static_cast<double>(g.m)));
    if (i > g.m || j > g.m) throw DataError("grid node outside [0,1] at row " + std::to_string(k + 1));
    g.at(i, j) = v[k];
  }
  return g;
}

inline CopulaGrid read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_grid_csv(in);
}

}  // namespace cfcopula
