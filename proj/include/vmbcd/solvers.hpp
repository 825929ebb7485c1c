#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vmbcd/problem.hpp"
#include "vmbcd/sampling.hpp"
#include "vmbcd/subproblem.hpp"
#include "vmbcd/theory.hpp"
#include "vmbcd/trace.hpp"

namespace vmbcd {

enum class algorithm_kind { vm_bcd, rcd_unit, rcd_short, fista };
enum class sampler_kind { uniform, lipschitz, optimal };
enum class metric_kind { hessian_block, fixed_global_bound, scaled_identity_lip, scaled_identity_lmin };

struct line_search_params {
  double beta = 0.5;
  double gamma = 1e-4;
  int max_backtracks = 60;
};

struct run_config {
  algorithm_kind algorithm = algorithm_kind::rcd_unit;
  sampler_kind sampler = sampler_kind::uniform;
  metric_kind metric = metric_kind::hessian_block;  // vm-bcd only
  int inner_budget = 10;                            // SpaRSA iterations per subproblem
  line_search_params ls;
  long long epochs = 10;
  std::uint64_t seed = 1;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  double stop_g_sq = -1;  // early stop when ||G||^2 falls below; off when < 0
  vector_t x0;            // zeros when empty

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("run_config: epochs must be >= 1");
    if (inner_budget < 1) throw std::invalid_argument("run_config: inner budget must be >= 1");
    if (!(ls.beta > 0 && ls.beta < 1)) throw std::invalid_argument("run_config: beta must lie in (0,1)");
    if (!(ls.gamma > 0 && ls.gamma < 1)) throw std::invalid_argument("run_config: gamma must lie in (0,1)");
  }
};

// Everything one iteration exposes to an observer: the committed step (alpha =
// 0 for null steps), subproblem outcome, and metric bounds.  References are
// valid only during the callback.
struct step_record {
  long long k = 0;
  index_t block = 0;
  double alpha = 0;
  int ls_trials = 0;
  int inner_iterations = 0;
  double delta = 0;
  double q_value = 0;
  double metric_m = 0;
  double metric_norm = 0;
  double lip = 0;
  const quadratic_model* model = nullptr;
  const vector_t* d = nullptr;
  const solver_state* state = nullptr;  // after the update
};

using step_observer = std::function<void(const step_record&)>;

struct run_result {
  run_trace trace;
  solver_state state;
  vector_t lip;  // per-block L_i used by the run
};

struct line_search_result {
  double alpha = 0;
  int trials = 0;
  vector_t z_new;
  double f_new = 0;
  double psi_new = 0;
};

// Backtracking Armijo search along the block direction d: largest alpha in
// {1, beta, beta^2, ...} with F(x + alpha U_i d) <= F(x) + alpha gamma delta.
// A_i d is formed once; every trial touches only the residual vector.
inline line_search_result line_search(const composite_problem& p, const solver_state& s,
                                      index_t i, const vector_t& d, double delta,
                                      const line_search_params& params) {
  const block_partition& part = p.partition();
  const auto xi = s.x.segment(part.begin(i), part.size(i));
  const double psi_i = reg_block_value(p.reg, xi);
  const double f_cur = s.objective();
  const vector_t aid = p.data.a.block_multiply(i, d);
  double alpha = 1.0;
  line_search_result r;
  for (int trial = 0; trial <= params.max_backtracks; ++trial) {
    vector_t z_try = s.z + alpha * aid;
    const double f_try = loss_eval(p.loss, z_try, p.data.b);
    const double psi_try = s.psi - psi_i + reg_block_value(p.reg, xi + alpha * d);
    r.trials = trial + 1;
    if (f_try + psi_try <= f_cur + alpha * params.gamma * delta) {
      r.alpha = alpha;
      r.z_new = std::move(z_try);
      r.f_new = f_try;
      r.psi_new = psi_try;
      return r;
    }
    alpha *= params.beta;
  }
  throw std::runtime_error("line_search: backtracking limit exceeded (invalid delta or metric)");
}

// Per-run metric state: block Lipschitz constants always; dense floored
// bounds precomputed for the fixed-global-bound policy.
struct metric_policy {
  metric_kind kind = metric_kind::hessian_block;
  double floor_eps = 1e-10;
  vector_t lip;
  double lip_min = 0;
  std::vector<matrix_t> fixed_h;
  vector_t fixed_m, fixed_norm;
};

namespace detail {

// Raise eigenvalues below eps to exactly eps; records the resulting bounds.
inline void eigen_floor(matrix_t& h, double eps, double& m_out, double& norm_out) {
  Eigen::SelfAdjointEigenSolver<matrix_t> es(h);
  vector_t ev = es.eigenvalues();
  bool touched = false;
  for (index_t j = 0; j < ev.size(); ++j)
    if (ev[j] < eps) {
      ev[j] = eps;
      touched = true;
    }
  m_out = ev.minCoeff();
  norm_out = ev.maxCoeff();
  if (touched) {
    h = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    h = ((h + h.transpose()) / 2.0).eval();
  }
}

}  // namespace detail

inline metric_policy make_metric_policy(const composite_problem& p, metric_kind kind) {
  metric_policy pol;
  pol.kind = kind;
  pol.lip = block_lipschitz(p);
  pol.lip_min = pol.lip.minCoeff();
  if (kind == metric_kind::fixed_global_bound) {
    const index_t n = p.blocks();
    pol.fixed_h.resize(static_cast<std::size_t>(n));
    pol.fixed_m.resize(n);
    pol.fixed_norm.resize(n);
    const double kappa = p.loss.curvature_bound();
    const vector_t ones = vector_t::Constant(p.data.a.rows(), kappa);
    for (index_t i = 0; i < n; ++i) {
      if (p.partition().size(i) <= 64) {
        matrix_t h = p.data.a.block_gram(i, ones);
        h.diagonal().array() += pol.floor_eps;
        detail::eigen_floor(h, pol.floor_eps, pol.fixed_m[i], pol.fixed_norm[i]);
        pol.fixed_h[static_cast<std::size_t>(i)] = std::move(h);
      } else {
        pol.fixed_m[i] = pol.floor_eps;
        pol.fixed_norm[i] = pol.lip[i] + pol.floor_eps;
      }
    }
  }
  return pol;
}

// Assembles the block model at the current iterate.  The Hessian policy
// rebuilds A_i' D A_i from the clamped curvature every call; blocks wider
// than 64 skip the eigendecomposition and use the operator form plus the
// eps floor (the clamped curvature already makes the Gram matrix PSD).
inline quadratic_model build_metric_model(const metric_policy& pol, const composite_problem& p,
                                          const solver_state& s, index_t i, vector_t grad) {
  const block_partition& part = p.partition();
  vector_t xi = s.x.segment(part.begin(i), part.size(i));
  switch (pol.kind) {
    case metric_kind::scaled_identity_lip:
      return make_scaled_identity_model(std::move(grad), std::move(xi), p.reg, pol.lip[i]);
    case metric_kind::scaled_identity_lmin:
      return make_scaled_identity_model(std::move(grad), std::move(xi), p.reg, pol.lip_min);
    case metric_kind::fixed_global_bound: {
      quadratic_model mod;
      mod.grad = std::move(grad);
      mod.x_base = std::move(xi);
      mod.reg = p.reg;
      mod.psi_base = reg_block_value(p.reg, mod.x_base);
      if (!pol.fixed_h[static_cast<std::size_t>(i)].size()) {
        const double kappa = p.loss.curvature_bound();
        const double eps = pol.floor_eps;
        const blocked_sparse_matrix* a = &p.data.a;
        mod.h_apply_fn = [a, i, kappa, eps](const vector_t& v) {
          return (kappa * a->block_transpose_multiply(i, a->block_multiply(i, v)) + eps * v).eval();
        };
      } else {
        mod.h_dense = pol.fixed_h[static_cast<std::size_t>(i)];
      }
      mod.m = pol.fixed_m[i];
      mod.m_norm = pol.fixed_norm[i];
      return mod;
    }
    case metric_kind::hessian_block: {
      quadratic_model mod;
      mod.grad = std::move(grad);
      mod.x_base = std::move(xi);
      mod.reg = p.reg;
      mod.psi_base = reg_block_value(p.reg, mod.x_base);
      const vector_t curv = clamped_curvature(p, s);
      if (part.size(i) <= 64) {
        // Convex losses: damp with eps*I outright.  Nonconvex: the clamped
        // curvature keeps the Gram PSD and the floor raises eigenvalues
        // below eps to exactly eps.
        matrix_t h = p.data.a.block_gram(i, curv);
        if (p.loss.convex()) h.diagonal().array() += pol.floor_eps;
        detail::eigen_floor(h, pol.floor_eps, mod.m, mod.m_norm);
        mod.h_dense = std::move(h);
      } else {
        const double eps = pol.floor_eps;
        const blocked_sparse_matrix* a = &p.data.a;
        mod.h_apply_fn = [a, i, curv, eps](const vector_t& v) {
          vector_t t = a->block_multiply(i, v);
          for (index_t r = 0; r < t.size(); ++r) t[r] *= curv[r];
          return (a->block_transpose_multiply(i, t) + eps * v).eval();
        };
        mod.m = pol.floor_eps;
        mod.m_norm = 0;  // estimated on demand
      }
      return mod;
    }
  }
  throw std::logic_error("build_metric_model: bad kind");
}

inline block_distribution make_sampler_dist(sampler_kind kind, algorithm_kind alg,
                                            const metric_policy& pol) {
  const index_t n = pol.lip.size();
  switch (kind) {
    case sampler_kind::uniform:
      return uniform_dist(n);
    case sampler_kind::lipschitz:
      return lipschitz_dist(pol.lip);
    case sampler_kind::optimal: {
      // M_i / alpha_bar_i with the algorithm's actual fixed quantities; for
      // unit- and short-step variants both reduce to Lipschitz sampling.
      vector_t big_m(n), alpha_bar(n);
      if (alg == algorithm_kind::rcd_short) {
        for (index_t i = 0; i < n; ++i) {
          big_m[i] = pol.lip_min;
          alpha_bar[i] = pol.lip_min / pol.lip[i];
        }
      } else if (alg == algorithm_kind::vm_bcd && pol.kind == metric_kind::fixed_global_bound) {
        big_m = pol.fixed_norm;
        alpha_bar.setOnes();
      } else {
        big_m = pol.lip;
        alpha_bar.setOnes();
      }
      return optimal_dist(big_m, alpha_bar);
    }
  }
  throw std::logic_error("make_sampler_dist: bad kind");
}

namespace detail {

struct epoch_stats {
  double alpha_sum = 0;
  long long steps = 0;
  void add(double a) {
    alpha_sum += a;
    ++steps;
  }
  double mean() const { return steps ? alpha_sum / static_cast<double>(steps) : 0.0; }
  void reset() { *this = epoch_stats{}; }
};

inline double sparsity_fraction(const vector_t& x) {
  index_t zeros = 0;
  for (index_t j = 0; j < x.size(); ++j)
    if (x[j] == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(x.size());
}

inline double gap_to_star(double f, double f_star) {
  if (!std::isfinite(f_star)) return 0.0;
  return (f - f_star) / (f_star != 0.0 ? std::abs(f_star) : 1.0);
}

class wall_timer {
 public:
  wall_timer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Shared outer loop of the three descent algorithms.  One epoch is N sampled
// iterations; z = A x is patched incrementally and re-derived from x every 10
// epochs (the caches of F are only ever replaced by accepted trial values, so
// recorded objectives are non-increasing by construction).
inline run_result descent_run(const composite_problem& p, const run_config& cfg,
                              const step_observer& observer = {}) {
  cfg.validate();
  if (cfg.algorithm == algorithm_kind::fista)
    throw std::invalid_argument("descent_run: fista has its own driver");
  const bool vm = cfg.algorithm == algorithm_kind::vm_bcd;
  const metric_kind mkind = vm ? cfg.metric
                               : (cfg.algorithm == algorithm_kind::rcd_unit
                                      ? metric_kind::scaled_identity_lip
                                      : metric_kind::scaled_identity_lmin);
  const metric_policy pol = make_metric_policy(p, mkind);
  const block_distribution dist = make_sampler_dist(cfg.sampler, cfg.algorithm, pol);
  const alias_table table = alias_init(dist);
  rng gen(cfg.seed);

  const index_t n_blocks = p.blocks();
  solver_state state = make_state(p, cfg.x0.size() ? cfg.x0 : vector_t::Zero(p.dim()));

  const double total_nnz = std::max<double>(1.0, static_cast<double>(p.data.a.nnz()));
  vector_t block_weight(n_blocks);
  for (index_t i = 0; i < n_blocks; ++i)
    block_weight[i] = static_cast<double>(p.data.a.block_nnz(i)) / total_nnz;

  run_result out;
  out.lip = pol.lip;
  detail::wall_timer timer;
  double weighted = 0;
  long long k = 0;
  detail::epoch_stats stats;

  auto record = [&](long long epoch) {
    trace_record r;
    r.epoch = epoch;
    r.f = state.objective();
    r.rel_gap = detail::gap_to_star(r.f, cfg.f_star);
    r.g_norm_sq = stationarity_G(p, state).squaredNorm();
    r.mean_alpha = stats.mean();
    r.sparsity = detail::sparsity_fraction(state.x);
    r.weighted_epoch = weighted;
    r.wall_ms = timer.ms();
    out.trace.records.push_back(r);
    return r.g_norm_sq;
  };

  double g_sq = record(0);
  for (long long epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.stop_g_sq >= 0 && g_sq <= cfg.stop_g_sq) break;
    if (epoch % 10 == 1 && epoch > 1) {
      assert(z_drift(p, state) <= 1e-8 * (1.0 + state.z.lpNorm<Eigen::Infinity>()));
      state.z = p.data.a.multiply(state.x);
    }
    stats.reset();
    for (index_t it = 0; it < n_blocks; ++it, ++k) {
      const index_t i = alias_sample(table, gen);
      weighted += block_weight[i];
      vector_t grad = partial_gradient(p, state, i);
      quadratic_model mod = build_metric_model(pol, p, state, i, std::move(grad));

      subproblem_solution sol;
      if (mod.identity_scale > 0 && !vm)
        sol = solve_scaled_identity(mod);
      else
        sol = sparsa_solve(mod, cfg.inner_budget);

      step_record rec;
      rec.k = k;
      rec.block = i;
      rec.inner_iterations = sol.inner_iterations;
      rec.delta = sol.delta;
      rec.q_value = sol.q_value;
      rec.metric_m = mod.m;
      rec.metric_norm = mod.m_norm > 0 ? mod.m_norm : metric_norm_estimate(mod);
      rec.lip = pol.lip[i];
      rec.model = &mod;
      rec.d = &sol.d;
      rec.state = &state;

      // A predicted decrease below the rounding noise of F cannot be
      // certified by the Armijo test; such blocks count as converged for
      // this visit.  Fixed-step paths keep their own commit guard instead.
      const double delta_floor =
          vm ? 1e-12 * (1.0 + std::abs(state.f) + std::abs(state.psi)) : 0.0;
      const bool null_step = sol.d.isZero(0.0) || !(sol.delta < -delta_floor);
      if (!null_step) {
        const block_partition& part = p.partition();
        if (vm) {
          line_search_result ls = line_search(p, state, i, sol.d, sol.delta, cfg.ls);
          state.x.segment(part.begin(i), part.size(i)) += ls.alpha * sol.d;
          state.z = std::move(ls.z_new);
          state.f = ls.f_new;
          state.psi = ls.psi_new;
          rec.alpha = ls.alpha;
          rec.ls_trials = ls.trials;
          stats.add(ls.alpha);
        } else {
          // Fixed step; committed only if the computed objective does not
          // increase (exact arithmetic guarantees descent, rounding may not).
          const double step = cfg.algorithm == algorithm_kind::rcd_unit ? 1.0 : pol.lip_min / pol.lip[i];
          vector_t z_try = state.z;
          p.data.a.block_multiply_add(i, sol.d, step, z_try);
          const double f_try = loss_eval(p.loss, z_try, p.data.b);
          const auto xi = state.x.segment(part.begin(i), part.size(i));
          const double psi_try =
              state.psi - reg_block_value(p.reg, xi) + reg_block_value(p.reg, xi + step * sol.d);
          if (f_try + psi_try <= state.objective()) {
            state.x.segment(part.begin(i), part.size(i)) += step * sol.d;
            state.z = std::move(z_try);
            state.f = f_try;
            state.psi = psi_try;
            rec.alpha = step;
            stats.add(step);
          }
        }
      }
      if (observer) observer(rec);
    }
    g_sq = record(epoch);
  }
  out.state = std::move(state);
  return out;
}

inline run_result vm_bcd_run(const composite_problem& p, const run_config& cfg,
                             const step_observer& observer = {}) {
  run_config c = cfg;
  c.algorithm = algorithm_kind::vm_bcd;
  return descent_run(p, c, observer);
}

inline run_result rcd_unit_run(const composite_problem& p, const run_config& cfg,
                               const step_observer& observer = {}) {
  run_config c = cfg;
  c.algorithm = algorithm_kind::rcd_unit;
  return descent_run(p, c, observer);
}

inline run_result rcd_short_run(const composite_problem& p, const run_config& cfg,
                                const step_observer& observer = {}) {
  run_config c = cfg;
  c.algorithm = algorithm_kind::rcd_short;
  return descent_run(p, c, observer);
}

// sigma_max(A)^2 of the whole matrix, for the FISTA step size.
inline double spectral_sqnorm(const blocked_sparse_matrix& a, std::uint64_t seed = 0xf157au) {
  rng gen(seed);
  vector_t v(a.cols());
  for (index_t j = 0; j < v.size(); ++j) v[j] = gen.next_normal();
  if (v.norm() == 0) return 0;
  v /= v.norm();
  double lam = 0;
  for (int it = 0; it < 1000; ++it) {
    vector_t w = a.multiply(v);
    const double lam_new = w.squaredNorm();
    if (lam_new == 0) return 0;
    vector_t u = a.transpose_multiply(w);
    v = u / u.norm();
    const bool done = std::abs(lam_new - lam) <= 1e-10 * lam_new;
    lam = lam_new;
    if (done) break;
  }
  return lam * (1.0 + 1e-8);
}

// Accelerated proximal gradient with fixed step 1/L_f, no restarts; full-
// vector baseline, convex losses only.  One iteration is one epoch.
inline run_result fista_run(const composite_problem& p, const run_config& cfg) {
  cfg.validate();
  if (!p.loss.convex())
    throw std::invalid_argument("fista_run: loss must be convex (biweight is not)");
  const double l_f = p.loss.curvature_bound() * spectral_sqnorm(p.data.a);
  if (!(l_f > 0)) throw std::invalid_argument("fista_run: zero data matrix");
  const block_partition& part = p.partition();

  vector_t x = cfg.x0.size() ? cfg.x0 : vector_t::Zero(p.dim());
  vector_t y = x;
  double t = 1.0;

  run_result out;
  out.lip = block_lipschitz(p);
  detail::wall_timer timer;

  solver_state state = make_state(p, x);
  auto record = [&](long long epoch) {
    trace_record r;
    r.epoch = epoch;
    r.f = state.objective();
    r.rel_gap = detail::gap_to_star(r.f, cfg.f_star);
    r.g_norm_sq = stationarity_G(p, state).squaredNorm();
    r.mean_alpha = epoch ? 1.0 : 0.0;
    r.sparsity = detail::sparsity_fraction(state.x);
    r.weighted_epoch = static_cast<double>(epoch);
    r.wall_ms = timer.ms();
    out.trace.records.push_back(r);
    return r.g_norm_sq;
  };

  double g_sq = record(0);
  for (long long epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.stop_g_sq >= 0 && g_sq <= cfg.stop_g_sq) break;
    const vector_t zy = p.data.a.multiply(y);
    const vector_t grad = p.data.a.transpose_multiply(loss_grad(p.loss, zy, p.data.b));
    const vector_t u = y - grad / l_f;
    vector_t x_next(p.dim());
    for (index_t i = 0; i < part.blocks(); ++i)
      x_next.segment(part.begin(i), part.size(i)) =
          reg_block_prox(p.reg, u.segment(part.begin(i), part.size(i)), 1.0 / l_f);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x = x_next;
    t = t_next;
    state = make_state(p, x);
    g_sq = record(epoch);
  }
  out.state = std::move(state);
  return out;
}

inline run_result solver_run(const composite_problem& p, const run_config& cfg,
                             const step_observer& observer = {}) {
  return cfg.algorithm == algorithm_kind::fista ? fista_run(p, cfg) : descent_run(p, cfg, observer);
}

struct reference_solution {
  vector_t x;
  double f = 0;
};

// High-accuracy optimum via long variable-metric runs (budget 20 inner
// iterations), stopping on ||G||^2 <= tol^2 or when certified decreases
// reach the rounding noise of F (||G|| ~ 1e-6 at unit objective scale).
inline reference_solution reference_optimum(const composite_problem& p, long long epochs,
                                            double g_tol = 1e-10) {
  run_config cfg;
  cfg.algorithm = algorithm_kind::vm_bcd;
  cfg.metric = metric_kind::hessian_block;
  cfg.sampler = sampler_kind::uniform;
  cfg.inner_budget = 20;
  cfg.epochs = epochs;
  cfg.seed = 0x5eedu;
  cfg.stop_g_sq = g_tol * g_tol;
  run_result r = descent_run(p, cfg);
  return {r.state.x, objective(p, r.state.x)};
}

}  // namespace vmbcd
