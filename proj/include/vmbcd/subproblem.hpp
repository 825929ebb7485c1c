#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "vmbcd/regularizer.hpp"
#include "vmbcd/rng.hpp"

namespace vmbcd {

// Per-block model Q(d) = g'd + d'Hd/2 + psi_i(x_i + d) - psi_i(x_i).
// The metric is a scaled identity, a dense matrix, or an opaque matvec;
// m and m_norm record the certified eigenvalue bounds m I <= H <= m_norm I.
struct quadratic_model {
  vector_t grad;
  vector_t x_base;
  separable_reg reg;

  double identity_scale = -1.0;                          // H = c I when > 0
  matrix_t h_dense;                                      // used when non-empty
  std::function<vector_t(const vector_t&)> h_apply_fn;   // fallback operator

  double m = 0.0;       // lower eigenvalue bound (after flooring)
  double m_norm = 0.0;  // operator norm (exact or upper estimate)
  double psi_base = 0.0;

  index_t dim() const { return grad.size(); }

  vector_t h_apply(const vector_t& v) const {
    if (identity_scale > 0) return identity_scale * v;
    if (h_dense.size() > 0) return h_dense * v;
    return h_apply_fn(v);
  }
};

inline quadratic_model make_scaled_identity_model(vector_t grad, vector_t x_base,
                                                  const separable_reg& reg, double c) {
  if (!(c > 0)) throw std::invalid_argument("scaled identity metric needs c > 0");
  quadratic_model mod;
  mod.grad = std::move(grad);
  mod.x_base = std::move(x_base);
  mod.reg = reg;
  mod.identity_scale = c;
  mod.m = c;
  mod.m_norm = c;
  mod.psi_base = reg_block_value(reg, mod.x_base);
  return mod;
}

struct subproblem_solution {
  vector_t d;
  double q_value = 0.0;
  double delta = 0.0;
  int inner_iterations = 0;
};

inline double delta_eval(const quadratic_model& mod, const vector_t& d) {
  return mod.grad.dot(d) + reg_block_value(mod.reg, mod.x_base + d) - mod.psi_base;
}

inline double q_eval(const quadratic_model& mod, const vector_t& d) {
  return delta_eval(mod, d) + 0.5 * d.dot(mod.h_apply(d));
}

// Exact minimizer for H = c I: x + d = blockprox(x - g/c, 1/c), any reg kind.
inline subproblem_solution solve_scaled_identity(const quadratic_model& mod) {
  if (!(mod.identity_scale > 0))
    throw std::invalid_argument("solve_scaled_identity: metric is not a scaled identity");
  const double c = mod.identity_scale;
  const vector_t v = mod.x_base - mod.grad / c;
  subproblem_solution s;
  s.d = reg_block_prox(mod.reg, v, 1.0 / c) - mod.x_base;
  s.delta = delta_eval(mod, s.d);
  s.q_value = s.delta + 0.5 * c * s.d.squaredNorm();
  return s;
}

inline subproblem_solution prox_identity_l1(const quadratic_model& mod) {
  if (mod.reg.kind != reg_kind::l1)
    throw std::invalid_argument("prox_identity_l1: regularizer is not l1");
  return solve_scaled_identity(mod);
}

inline subproblem_solution prox_identity_group(const quadratic_model& mod) {
  if (mod.reg.kind != reg_kind::group_l2)
    throw std::invalid_argument("prox_identity_group: regularizer is not group-l2");
  return solve_scaled_identity(mod);
}

// 5-step power estimate of ||H||; used for the first SpaRSA steplength and as
// the fallback m_norm for opaque metrics.
inline double metric_norm_estimate(const quadratic_model& mod) {
  if (mod.m_norm > 0) return mod.m_norm;
  if (mod.identity_scale > 0) return mod.identity_scale;
  rng gen(0x5aa5u, 0);
  vector_t v(mod.dim());
  for (index_t j = 0; j < v.size(); ++j) v[j] = gen.next_normal();
  v /= v.norm();
  double lam = 1.0;
  for (int it = 0; it < 5; ++it) {
    vector_t w = mod.h_apply(v);
    const double n = w.norm();
    if (n == 0) return 1.0;
    lam = v.dot(w);
    v = w / n;
  }
  return std::max(lam, 1e-12);
}

// Monotone spectral proximal gradient on Q.  Steplength sigma from the
// Barzilai-Borwein ratio (safeguarded to [1e-10, 1e10]), candidate
// d+ = blockprox_{psi/sigma}(d - (g + H d)/sigma), accepted when
// Q(d+) <= Q(d) - 1e-4 sigma ||d+ - d||^2 / 2, else sigma doubles (<= 30
// times).  Q decreases monotonically, so the last accepted iterate is best.
inline subproblem_solution sparsa_solve(const quadratic_model& mod, int budget) {
  if (budget < 1) throw std::invalid_argument("sparsa_solve: budget must be >= 1");
  const index_t n = mod.dim();
  vector_t d = vector_t::Zero(n);
  vector_t hd = vector_t::Zero(n);
  double q = 0.0;
  double sigma = std::max(metric_norm_estimate(mod), 1e-12);
  subproblem_solution out;
  out.d = d;
  for (int j = 0; j < budget; ++j) {
    const vector_t smooth_grad = mod.grad + hd;
    bool accepted = false;
    vector_t d_next, hd_next;
    double q_next = 0.0;
    for (int bt = 0; bt <= 30; ++bt) {
      const vector_t u = mod.x_base + d - smooth_grad / sigma;
      d_next = reg_block_prox(mod.reg, u, 1.0 / sigma) - mod.x_base;
      hd_next = mod.h_apply(d_next);
      q_next = mod.grad.dot(d_next) + 0.5 * d_next.dot(hd_next) +
               reg_block_value(mod.reg, mod.x_base + d_next) - mod.psi_base;
      if (!std::isfinite(q_next)) throw std::runtime_error("sparsa_solve: non-finite model value");
      const double move = (d_next - d).squaredNorm();
      if (q_next <= q - 1e-4 * sigma * move / 2) {
        accepted = true;
        break;
      }
      sigma = std::min(sigma * 2.0, 1e10);
    }
    if (!accepted) break;
    const vector_t dd = d_next - d;
    const double dd_sq = dd.squaredNorm();
    if (dd_sq == 0.0) break;
    const double bb = dd.dot(hd_next - hd) / dd_sq;
    sigma = std::min(std::max(bb, 1e-10), 1e10);
    d = std::move(d_next);
    hd = std::move(hd_next);
    q = q_next;
    ++out.inner_iterations;
  }
  out.d = std::move(d);
  out.q_value = q;
  out.delta = delta_eval(mod, out.d);
  return out;
}

// eta-hat = (Q(d) - Qhat*) / (0 - Qhat*) clamped to [0,1], with Qhat* a
// certified lower bound on Q*: the better of a closed form (identity metrics)
// or a large-budget SpaRSA run, lowered by the strong-convexity residual
// ||(H - sigma I)(u+ - d_ref)||^2 / (2 m) of one extra prox-gradient step.
// A lower bound keeps eta-hat >= true eta, so step-size assertions built on
// it stay valid.
inline double certify_eta(const quadratic_model& mod, const vector_t& d, int reference_budget = 1000) {
  const double q_d = q_eval(mod, d);
  double q_star;
  if (mod.identity_scale > 0) {
    q_star = solve_scaled_identity(mod).q_value;
  } else {
    const subproblem_solution ref = sparsa_solve(mod, std::max(reference_budget, 1000));
    const double sigma = std::max(metric_norm_estimate(mod), 1e-12);
    const vector_t u = mod.x_base + ref.d - (mod.grad + mod.h_apply(ref.d)) / sigma;
    const vector_t d_plus = reg_block_prox(mod.reg, u, 1.0 / sigma) - mod.x_base;
    const vector_t xi = mod.h_apply(d_plus - ref.d) - sigma * (d_plus - ref.d);
    const double m = std::max(mod.m, 1e-300);
    q_star = std::min(ref.q_value, q_eval(mod, d_plus)) - xi.squaredNorm() / (2.0 * m);
  }
  if (!(q_star < 0.0)) return 0.0;
  const double eta = (q_d - q_star) / (0.0 - q_star);
  return std::min(1.0, std::max(0.0, eta));
}

}  // namespace vmbcd
