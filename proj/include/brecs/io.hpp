#pragma once

// Numeric CSV ingestion and emission.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "brecs/errors.hpp"
#include "brecs/linalg.hpp"
#include "brecs/model.hpp"
#include "brecs/rng.hpp"

namespace brecs {

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has no header row
  Matrix values;
  std::vector<std::string> comments;  // '#' lines, without the marker
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace detail

/// Reads a comma-separated numeric table. Blank lines and lines starting with
/// '#' are skipped; the first data line is a header iff some cell is not numeric.
inline CsvTable read_csv(std::istream& in, const std::string& name = "<stream>") {
  CsvTable t;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view v = detail::trim(line);
    if (v.empty()) continue;
    if (v.front() == '#') {
      t.comments.emplace_back(detail::trim(v.substr(1)));
      continue;
    }
    const auto cells = detail::split_cells(v);
    std::vector<double> row(cells.size());
    std::size_t bad = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!detail::parse_double(cells[c], row[c])) {
        bad = c;
        break;
      }
    if (first) {
      first = false;
      width = cells.size();
      if (bad < cells.size()) {
        for (auto c : cells) t.header.push_back(detail::unquote(c));
        continue;
      }
    }
    const std::string where = name + ":" + std::to_string(lineno);
    if (cells.size() != width)
      throw DataError(where + ": expected " + std::to_string(width) + " cells, found " +
                      std::to_string(cells.size()) + " (ragged row)");
    if (bad < cells.size())
      throw DataError(where + ": cell " + std::to_string(bad + 1) + " ('" + std::string(cells[bad]) +
                      "') is not numeric");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(name + ": no numeric rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) t.values(i, j) = rows[i][j];
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  return read_csv(in, path);
}

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

inline void write_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header = {},
                      const std::vector<std::string>& comments = {}) {
  write_comments(out, comments);
  if (!header.empty()) {
    if (static_cast<Eigen::Index>(header.size()) != m.cols()) throw DomainError("write_csv: header width mismatch");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {},
                      const std::vector<std::string>& comments = {}) {
  std::ofstream out(path);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_csv(out, m, header, comments);
  if (!out) throw DataError(path + ": write failed");
}

/// Header names prefix1..prefixN.
inline std::vector<std::string> numbered(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index i = 1; i <= n; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

struct DatasetOptions {
  bool center = false;       // subtract column means from Y
  bool intercept = false;    // append a column of ones to X
  long subsample = 0;        // keep this many rows chosen at random (0 = all)
  std::uint64_t subsample_seed = 1;
};

/// Loads Y and X from CSV files and applies subsampling, centering and intercept in that order.
inline RegressionData load_dataset(const std::string& y_path, const std::string& x_path,
                                   const DatasetOptions& opt = {}) {
  Matrix y = read_csv(y_path).values;
  Matrix x = read_csv(x_path).values;
  if (y.rows() != x.rows())
    throw DataError("row-count mismatch: " + y_path + " has " + std::to_string(y.rows()) + " rows, " + x_path +
                    " has " + std::to_string(x.rows()));
  if (opt.subsample > 0 && opt.subsample < y.rows()) {
    // partial Fisher-Yates, then restore file order
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index i = 0; i < y.rows(); ++i) idx[i] = i;
    RngHandle rng(opt.subsample_seed);
    const auto n = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index i = 0; i < opt.subsample; ++i) {
      const auto j = std::min(n - 1, i + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(opt.subsample));
    std::sort(idx.begin(), idx.end());
    Matrix ys(opt.subsample, y.cols()), xs(opt.subsample, x.cols());
    for (Eigen::Index i = 0; i < opt.subsample; ++i) {
      ys.row(i) = y.row(idx[i]);
      xs.row(i) = x.row(idx[i]);
    }
    y = std::move(ys);
    x = std::move(xs);
  }
  if (opt.center) y.rowwise() -= y.colwise().mean();
  if (opt.intercept) {
    x.conservativeResize(Eigen::NoChange, x.cols() + 1);
    x.col(x.cols() - 1).setOnes();
  }
  try {
    return RegressionData(std::move(y), std::move(x), opt.center, opt.intercept);
  } catch (const DataError& e) {
    throw DataError(y_path + " / " + x_path + ": " + e.what());
  }
}

}  // namespace brecs
