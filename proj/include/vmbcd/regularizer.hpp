#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "vmbcd/partition.hpp"
#include "vmbcd/sparse_matrix.hpp"

namespace vmbcd {

enum class reg_kind { zero, l1, group_l2 };

// Block-separable regularizer psi(x) = sum_i weight * psi_i(x_i).
//   l1:       weight * ||x_i||_1   (separable further by coordinate)
//   group_l2: weight * ||x_i||_2   (non-smooth at the block origin)
//   zero:     0                    (smooth problems)
// A single scalar weight is shared by all blocks.
struct separable_reg {
  reg_kind kind = reg_kind::zero;
  double weight = 1.0;
};

inline double reg_block_value(const separable_reg& r, const vector_t& xi) {
  switch (r.kind) {
    case reg_kind::zero: return 0.0;
    case reg_kind::l1: return r.weight * xi.lpNorm<1>();
    case reg_kind::group_l2: return r.weight * xi.norm();
  }
  throw std::logic_error("separable_reg: bad kind");
}

inline double reg_value(const separable_reg& r, const vector_t& x, const block_partition& part) {
  double s = 0;
  for (index_t i = 0; i < part.blocks(); ++i)
    s += reg_block_value(r, x.segment(part.begin(i), part.size(i)));
  return s;
}

// argmin_u  (1/2) ||u - v||^2 + tau * psi_i(u)
inline vector_t reg_block_prox(const separable_reg& r, const vector_t& v, double tau) {
  const double t = tau * r.weight;
  switch (r.kind) {
    case reg_kind::zero:
      return v;
    case reg_kind::l1: {
      vector_t u(v.size());
      for (index_t j = 0; j < v.size(); ++j)
        u[j] = v[j] > t ? v[j] - t : (v[j] < -t ? v[j] + t : 0.0);
      return u;
    }
    case reg_kind::group_l2: {
      const double n = v.norm();
      if (n <= t) return vector_t::Zero(v.size());
      return (1.0 - t / n) * v;
    }
  }
  throw std::logic_error("separable_reg: bad kind");
}

}  // namespace vmbcd
