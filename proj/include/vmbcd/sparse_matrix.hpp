#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "vmbcd/partition.hpp"
#include "vmbcd/rng.hpp"

namespace vmbcd {

using vector_t = Eigen::VectorXd;
using matrix_t = Eigen::MatrixXd;

struct triplet {
  index_t row;
  index_t col;
  double value;
};

// Column-compressed sparse matrix with an attached column partition, so every
// column block A_i is directly addressable.  Row indices are strictly
// increasing within each column; this is validated at construction.
class blocked_sparse_matrix {
 public:
  blocked_sparse_matrix() = default;

  blocked_sparse_matrix(index_t rows, index_t cols, std::vector<triplet> entries,
                        block_partition partition)
      : rows_(rows), cols_(cols), partition_(std::move(partition)) {
    if (partition_.dim() != cols)
      throw std::invalid_argument("blocked_sparse_matrix: partition does not cover all columns");
    std::sort(entries.begin(), entries.end(), [](const triplet& a, const triplet& b) {
      return std::tie(a.col, a.row) < std::tie(b.col, b.row);
    });
    col_ptr_.assign(static_cast<std::size_t>(cols) + 1, 0);
    row_idx_.reserve(entries.size());
    val_.reserve(entries.size());
    for (const triplet& t : entries) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw std::invalid_argument("blocked_sparse_matrix: entry out of range");
      if (t.value == 0.0) continue;
      ++col_ptr_[static_cast<std::size_t>(t.col) + 1];
      row_idx_.push_back(t.row);
      val_.push_back(t.value);
    }
    for (index_t j = 0; j < cols; ++j)
      col_ptr_[static_cast<std::size_t>(j) + 1] += col_ptr_[static_cast<std::size_t>(j)];
    for (index_t j = 0; j < cols; ++j)
      for (index_t k = col_ptr_[static_cast<std::size_t>(j)] + 1; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
        if (row_idx_[static_cast<std::size_t>(k)] <= row_idx_[static_cast<std::size_t>(k) - 1])
          throw std::invalid_argument("blocked_sparse_matrix: duplicate entry in a column");
  }

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  index_t nnz() const { return static_cast<index_t>(val_.size()); }
  const block_partition& partition() const { return partition_; }
  index_t blocks() const { return partition_.blocks(); }

  index_t col_nnz(index_t j) const {
    return col_ptr_[static_cast<std::size_t>(j) + 1] - col_ptr_[static_cast<std::size_t>(j)];
  }

  index_t block_nnz(index_t i) const {
    index_t s = 0;
    for (index_t j = partition_.begin(i); j < partition_.end(i); ++j) s += col_nnz(j);
    return s;
  }

  double col_sqnorm(index_t j) const {
    double s = 0;
    for (index_t k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
      s += val_[static_cast<std::size_t>(k)] * val_[static_cast<std::size_t>(k)];
    return s;
  }

  // z = A x
  vector_t multiply(const vector_t& x) const {
    vector_t z = vector_t::Zero(rows_);
    for (index_t j = 0; j < cols_; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      for (index_t k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
        z[row_idx_[static_cast<std::size_t>(k)]] += val_[static_cast<std::size_t>(k)] * xj;
    }
    return z;
  }

  // A^T u
  vector_t transpose_multiply(const vector_t& u) const {
    vector_t r(cols_);
    for (index_t j = 0; j < cols_; ++j) {
      double s = 0;
      for (index_t k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
        s += val_[static_cast<std::size_t>(k)] * u[row_idx_[static_cast<std::size_t>(k)]];
      r[j] = s;
    }
    return r;
  }

  // A_i d for a block-local vector d of length size(i); cost O(nnz(A_i)).
  vector_t block_multiply(index_t i, const vector_t& d) const {
    vector_t z = vector_t::Zero(rows_);
    block_multiply_add(i, d, 1.0, z);
    return z;
  }

  // z += scale * A_i d
  void block_multiply_add(index_t i, const vector_t& d, double scale, vector_t& z) const {
    const index_t j0 = partition_.begin(i);
    for (index_t j = j0; j < partition_.end(i); ++j) {
      const double dj = scale * d[j - j0];
      if (dj == 0.0) continue;
      for (index_t k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
        z[row_idx_[static_cast<std::size_t>(k)]] += val_[static_cast<std::size_t>(k)] * dj;
    }
  }

  // A_i^T u; cost O(nnz(A_i)).
  vector_t block_transpose_multiply(index_t i, const vector_t& u) const {
    const index_t j0 = partition_.begin(i);
    vector_t r(partition_.size(i));
    for (index_t j = j0; j < partition_.end(i); ++j) {
      double s = 0;
      for (index_t k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
        s += val_[static_cast<std::size_t>(k)] * u[row_idx_[static_cast<std::size_t>(k)]];
      r[j - j0] = s;
    }
    return r;
  }

  // A_i^T diag(w) A_i as a dense matrix; column-pair merges over sorted rows.
  matrix_t block_gram(index_t i, const vector_t& w) const {
    const index_t j0 = partition_.begin(i);
    const index_t ni = partition_.size(i);
    matrix_t h(ni, ni);
    for (index_t a = 0; a < ni; ++a)
      for (index_t b = a; b < ni; ++b) {
        double s = 0;
        index_t ka = col_ptr_[static_cast<std::size_t>(j0 + a)];
        index_t kb = col_ptr_[static_cast<std::size_t>(j0 + b)];
        const index_t ea = col_ptr_[static_cast<std::size_t>(j0 + a) + 1];
        const index_t eb = col_ptr_[static_cast<std::size_t>(j0 + b) + 1];
        while (ka < ea && kb < eb) {
          const index_t ra = row_idx_[static_cast<std::size_t>(ka)];
          const index_t rb = row_idx_[static_cast<std::size_t>(kb)];
          if (ra == rb) {
            s += w[ra] * val_[static_cast<std::size_t>(ka)] * val_[static_cast<std::size_t>(kb)];
            ++ka; ++kb;
          } else if (ra < rb) ++ka; else ++kb;
        }
        h(a, b) = s;
        h(b, a) = s;
      }
    return h;
  }

  // sigma_max(A_i)^2.  Single columns are exact; wider blocks use power
  // iteration on A_i^T A_i (relative tolerance 1e-10, at most 1000 steps) and
  // the result is inflated by (1 + 1e-8) so it stays a valid upper bound.
  double block_spectral_sqnorm(index_t i) const {
    const index_t ni = partition_.size(i);
    if (block_nnz(i) == 0) return 0.0;
    if (ni == 1) return col_sqnorm(partition_.begin(i));
    rng gen(0xb10c5u, static_cast<std::uint64_t>(i));
    vector_t v(ni);
    for (index_t j = 0; j < ni; ++j) v[j] = gen.next_normal();
    v /= v.norm();
    double lam = 0;
    for (int it = 0; it < 1000; ++it) {
      vector_t w = block_multiply(i, v);
      const double lam_new = w.squaredNorm();
      if (lam_new == 0.0) {
        for (index_t j = 0; j < ni; ++j) v[j] = gen.next_normal();
        v /= v.norm();
        continue;
      }
      vector_t u = block_transpose_multiply(i, w);
      v = u / u.norm();
      const bool done = std::abs(lam_new - lam) <= 1e-10 * lam_new;
      lam = lam_new;
      if (done) break;
    }
    return lam * (1.0 + 1e-8);
  }

  matrix_t to_dense() const {
    matrix_t m = matrix_t::Zero(rows_, cols_);
    for (index_t j = 0; j < cols_; ++j)
      for (index_t k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
        m(row_idx_[static_cast<std::size_t>(k)], j) = val_[static_cast<std::size_t>(k)];
    return m;
  }

  const std::vector<index_t>& col_ptr() const { return col_ptr_; }
  const std::vector<index_t>& row_idx() const { return row_idx_; }
  const std::vector<double>& values() const { return val_; }

 private:
  index_t rows_ = 0;
  index_t cols_ = 0;
  std::vector<index_t> col_ptr_;
  std::vector<index_t> row_idx_;
  std::vector<double> val_;
  block_partition partition_;
};

struct dataset {
  blocked_sparse_matrix a;
  vector_t b;

  void validate() const {
    if (a.rows() != b.size())
      throw std::invalid_argument("dataset: label count does not match row count");
  }
};

}  // namespace vmbcd
