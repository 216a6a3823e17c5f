#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fbl/error.hpp"
#include "fbl/fuzzy.hpp"

namespace fbl {

struct Dataset {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> input_names;
  std::string response_name = "y";

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return X.cols; }

  bool operator==(const Dataset&) const = default;
};

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (t.header.empty()) {
      for (auto& c : cells) t.header.push_back(detail::trim(c));
      if (!t.header.empty() && t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0].erase(0, 3);
      t.values = Matrix(0, t.header.size());
      continue;
    }
    detail::require(cells.size() == t.header.size(), path + ":" + std::to_string(lineno) + ": expected " +
                                                         std::to_string(t.header.size()) + " columns, got " +
                                                         std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto cell = detail::trim(cells[c]);
      const std::string where = path + ":" + std::to_string(lineno) + ", column " + std::to_string(c + 1) + " ('" +
                                t.header[c] + "')";
      detail::require(!cell.empty(), where + ": missing value");
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw Error(where + ": cannot parse '" + cell + "' as a number");
      }
      detail::require(used == cell.size(), where + ": cannot parse '" + cell + "' as a number");
      detail::require(std::isfinite(v), where + ": non-finite value");
      row.push_back(v);
    }
    t.values.append_row(row);
  }
  detail::require(!t.header.empty(), "'" + path + "' is empty");
  return t;
}

inline void write_csv_table(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
  std::ofstream out(path);
  detail::require(out.good(), "cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t r = 0; r < values.rows; ++r) {
    for (std::size_t c = 0; c < values.cols; ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
  detail::require(out.good(), "failed writing '" + path + "'");
}

// The response is the last column unless `response` names another one.
inline Dataset load_csv(const std::string& path, const std::optional<std::string>& response = std::nullopt) {
  auto t = read_csv_table(path);
  detail::require(t.values.rows > 0, "'" + path + "' has a header but no data rows");
  detail::require(t.header.size() >= 2, "'" + path + "' needs at least one input and one response column");
  std::size_t resp = t.header.size() - 1;
  if (response) {
    auto it = std::find(t.header.begin(), t.header.end(), *response);
    detail::require(it != t.header.end(), "'" + path + "' has no column '" + *response + "'");
    resp = static_cast<std::size_t>(it - t.header.begin());
  }
  Dataset d;
  d.response_name = t.header[resp];
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c != resp) d.input_names.push_back(t.header[c]);
  }
  d.X = Matrix(t.values.rows, t.header.size() - 1);
  d.y.resize(t.values.rows);
  for (std::size_t r = 0; r < t.values.rows; ++r) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c == resp) {
        d.y[r] = t.values(r, c);
      } else {
        d.X(r, k++) = t.values(r, c);
      }
    }
  }
  return d;
}

inline void write_csv(const std::string& path, const Dataset& d) {
  auto header = d.input_names;
  header.push_back(d.response_name);
  Matrix m(d.size(), d.dims() + 1);
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t c = 0; c < d.dims(); ++c) m(r, c) = d.X(r, c);
    m(r, d.dims()) = d.y[r];
  }
  write_csv_table(path, header, m);
}

struct ColumnSummary {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample (N - 1) standard deviation; 0 when N == 1
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

// Linear interpolation between order statistics at position p * (n - 1).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ColumnSummary summarize_column(std::string name, std::vector<double> v) {
  detail::require(!v.empty(), "summarize: column '" + name + "' is empty");
  ColumnSummary s;
  s.name = std::move(name);
  s.count = v.size();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.q25 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q75 = quantile_sorted(v, 0.75);
  return s;
}

// One summary per input column followed by the response.
inline std::vector<ColumnSummary> summarize_dataset(const Dataset& d) {
  detail::require(d.size() >= 1, "summarize_dataset: no rows");
  std::vector<ColumnSummary> out;
  for (std::size_t c = 0; c < d.dims(); ++c) out.push_back(summarize_column(d.input_names[c], d.X.column(c)));
  out.push_back(summarize_column(d.response_name, d.y));
  return out;
}

}  // namespace fbl
