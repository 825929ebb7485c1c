#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "vmbcd/sparse_matrix.hpp"

namespace vmbcd {

// LIBSVM text format: one example per line, "label idx:value ...", 1-based
// feature indices strictly increasing within a line.  Malformed input throws
// with the offending line number.
inline dataset parse_libsvm(std::istream& in, index_t block_size = 1, index_t min_cols = 0) {
  std::vector<triplet> entries;
  std::vector<double> labels;
  index_t max_col = min_cols;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("libsvm parse error at line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const char* p = line.c_str();
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\0' || *p == '\r') continue;
    char* end = nullptr;
    const double label = std::strtod(p, &end);
    if (end == p) fail("expected a numeric label");
    p = end;
    const index_t row = static_cast<index_t>(labels.size());
    labels.push_back(label);
    index_t prev_idx = 0;
    for (;;) {
      while (*p == ' ' || *p == '\t') ++p;
      if (*p == '\0' || *p == '\r' || *p == '\n') break;
      const long idx = std::strtol(p, &end, 10);
      if (end == p || *end != ':') fail("expected index:value");
      if (idx < 1) fail("feature indices are 1-based");
      if (idx <= prev_idx) fail("feature indices must be strictly increasing");
      prev_idx = static_cast<index_t>(idx);
      p = end + 1;
      const double value = std::strtod(p, &end);
      if (end == p) fail("expected a numeric value");
      p = end;
      entries.push_back({row, static_cast<index_t>(idx) - 1, value});
      if (static_cast<index_t>(idx) > max_col) max_col = static_cast<index_t>(idx);
    }
  }
  if (labels.empty()) {
    lineno = 0;
    fail("empty input");
  }
  const index_t rows = static_cast<index_t>(labels.size());
  const index_t cols = max_col;
  dataset d{blocked_sparse_matrix(rows, cols, std::move(entries), make_partition(cols, block_size)),
            Eigen::Map<const vector_t>(labels.data(), rows)};
  return d;
}

inline dataset load_libsvm(const std::string& path, index_t block_size = 1, index_t min_cols = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_libsvm(in, block_size, min_cols);
}

inline void write_libsvm(std::ostream& out, const dataset& d) {
  const auto& a = d.a;
  // Column-compressed storage is transposed back to rows for output.
  std::vector<std::vector<std::pair<index_t, double>>> rows(static_cast<std::size_t>(a.rows()));
  for (index_t j = 0; j < a.cols(); ++j)
    for (index_t k = a.col_ptr()[static_cast<std::size_t>(j)]; k < a.col_ptr()[static_cast<std::size_t>(j) + 1]; ++k)
      rows[static_cast<std::size_t>(a.row_idx()[static_cast<std::size_t>(k)])].emplace_back(
          j, a.values()[static_cast<std::size_t>(k)]);
  char buf[64];
  for (index_t r = 0; r < a.rows(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g", d.b[r]);
    out << buf;
    for (const auto& [j, v] : rows[static_cast<std::size_t>(r)]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << (j + 1) << ':' << buf;
    }
    out << '\n';
  }
}

inline void save_libsvm(const std::string& path, const dataset& d) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_libsvm(out, d);
}

}  // namespace vmbcd
