#pragma once

#include <cmath>
#include <iostream>
#include <utility>

#include "vmbcd/loss.hpp"
#include "vmbcd/regularizer.hpp"
#include "vmbcd/sparse_matrix.hpp"

namespace vmbcd {

// F(x) = g(A x) + psi(x), g row-separable, psi block-separable on A's
// column partition.
struct composite_problem {
  dataset data;
  separable_loss loss;
  separable_reg reg;

  const blocked_sparse_matrix& a() const { return data.a; }
  const block_partition& partition() const { return data.a.partition(); }
  index_t blocks() const { return partition().blocks(); }
  index_t dim() const { return data.a.cols(); }
};

inline double objective(const composite_problem& p, const vector_t& x) {
  return loss_eval(p.loss, p.data.a.multiply(x), p.data.b) +
         reg_value(p.reg, x, p.partition());
}

// Iterate plus the cached quantities every per-block step needs: z = A x and
// the two halves of F.  f and psi are maintained incrementally by the solvers
// and must track recomputation to ~1e-10 relative (see z_drift).
struct solver_state {
  vector_t x;
  vector_t z;
  double f = 0;
  double psi = 0;

  double objective() const { return f + psi; }
};

inline solver_state make_state(const composite_problem& p, vector_t x0) {
  solver_state s;
  s.z = p.data.a.multiply(x0);
  s.x = std::move(x0);
  s.f = loss_eval(p.loss, s.z, p.data.b);
  s.psi = reg_value(p.reg, s.x, p.partition());
  return s;
}

// grad_i f = A_i^T g'(z); O(nnz(A_i) + rows).
inline vector_t partial_gradient(const composite_problem& p, const solver_state& s, index_t i) {
  return p.data.a.block_transpose_multiply(i, loss_grad(p.loss, s.z, p.data.b));
}

// Full grad f = A^T g'(z); O(nnz).
inline vector_t full_gradient(const composite_problem& p, const solver_state& s) {
  return p.data.a.transpose_multiply(loss_grad(p.loss, s.z, p.data.b));
}

// Rowwise curvature clamped at zero; valid diagonal for metric construction.
inline vector_t clamped_curvature(const composite_problem& p, const solver_state& s) {
  vector_t w = loss_curv_diag(p.loss, s.z, p.data.b);
  for (index_t r = 0; r < w.size(); ++r) w[r] = std::max(w[r], 0.0);
  return w;
}

// (A_i^T diag(w) A_i) v with w the clamped curvature at the current iterate.
inline vector_t hessian_block_matvec(const composite_problem& p, const solver_state& s,
                                     index_t i, const vector_t& v) {
  const vector_t w = clamped_curvature(p, s);
  vector_t t = p.data.a.block_multiply(i, v);
  for (index_t r = 0; r < t.size(); ++r) t[r] *= w[r];
  return p.data.a.block_transpose_multiply(i, t);
}

// L_i = curvature_bound * sigma_max(A_i)^2.  All-zero blocks are floored at
// 1e-12 with a warning; they never influence the iterate.
inline vector_t block_lipschitz(const composite_problem& p) {
  const double kappa = p.loss.curvature_bound();
  vector_t l(p.blocks());
  for (index_t i = 0; i < p.blocks(); ++i) {
    const double s2 = p.data.a.block_spectral_sqnorm(i);
    if (s2 <= 0) {
      std::cerr << "vmbcd: block " << i << " has no nonzeros; flooring L_i at 1e-12\n";
      l[i] = 1e-12;
    } else {
      l[i] = kappa * s2;
    }
  }
  return l;
}

// max-norm distance between the cached z and a fresh A x.
inline double z_drift(const composite_problem& p, const solver_state& s) {
  return (s.z - p.data.a.multiply(s.x)).lpNorm<Eigen::Infinity>();
}

}  // namespace vmbcd
