#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Core>

#include "vmbcd/problem.hpp"
#include "vmbcd/regularizer.hpp"

namespace vmbcd {

// Identity-metric proximal-gradient step: G = argmin_d grad'd + ||d||^2/2
// + psi(x+d), computed blockwise via x + G = blockprox(x - grad f).
// G = 0 iff 0 is in the subdifferential of F at x.
inline vector_t stationarity_G(const composite_problem& p, const solver_state& s) {
  const vector_t grad = full_gradient(p, s);
  const block_partition& part = p.partition();
  vector_t g(p.dim());
  for (index_t i = 0; i < part.blocks(); ++i) {
    const auto xi = s.x.segment(part.begin(i), part.size(i));
    g.segment(part.begin(i), part.size(i)) =
        reg_block_prox(p.reg, xi - grad.segment(part.begin(i), part.size(i)), 1.0) - xi;
  }
  return g;
}

inline vector_t stationarity_G(const composite_problem& p, const vector_t& x) {
  return stationarity_G(p, make_state(p, x));
}

// Per-run constants the rate bounds are evaluated from.  m/M are the metric
// eigenvalue bounds, alpha_bar the per-block step-size lower bounds, p the
// sampling distribution; mu, r0 and f0_gap describe the instance.
struct theory_params {
  vector_t m, big_m, lip, p, alpha_bar;
  double eta = 0;
  double gamma = 1;
  double mu = 0;
  double r0 = 0;
  double f0_gap = 0;

  index_t blocks() const { return p.size(); }

  // min_i alpha_bar_i p_i
  double pi_bar() const {
    double v = alpha_bar[0] * p[0];
    for (index_t i = 1; i < p.size(); ++i) v = std::min(v, alpha_bar[i] * p[i]);
    return v;
  }

  // max_i M_i / (alpha_bar_i p_i): the norm driving the sublinear constant.
  double norm_pam() const {
    double v = 0;
    for (index_t i = 0; i < p.size(); ++i) v = std::max(v, big_m[i] / (alpha_bar[i] * p[i]));
    return v;
  }
};

// Step-size guarantee of the backtracking line search under the eta-approximate
// subproblem condition.
inline double line_search_alpha_floor(double m, double lip, double beta, double gamma, double eta) {
  return std::min(1.0, 2.0 * beta * (1.0 - gamma) * m / (lip * (1.0 + std::sqrt(eta))));
}

struct early_linear_bound {
  double factor = 1;    // per-iteration contraction while the gap is large
  long long k0_bar = 0; // deterministic phase-change index
};

inline early_linear_bound bound_early_linear(const theory_params& tp) {
  early_linear_bound out;
  const double pi = tp.pi_bar();
  out.factor = 1.0 - (1.0 - tp.eta) * tp.gamma * pi / 2.0;
  const double denom = tp.norm_pam() * pi * tp.r0 * tp.r0;
  if (tp.f0_gap > denom && denom > 0) {
    const double num = std::log(tp.f0_gap / denom);
    const double den = std::log(2.0 / (2.0 - (1.0 - tp.eta) * tp.gamma * pi));
    out.k0_bar = static_cast<long long>(std::ceil(num / den));
  }
  return out;
}

// Expected-gap bound for k >= k0 in the sublinear phase.
inline double bound_sublinear(const theory_params& tp, long long k, long long k0) {
  if (k < k0) throw std::invalid_argument("bound_sublinear: k < k0");
  const double n = static_cast<double>(tp.blocks());
  return 2.0 * tp.norm_pam() * tp.r0 * tp.r0 /
         (2.0 * n + (1.0 - tp.eta) * tp.gamma * static_cast<double>(k - k0));
}

// Per-iteration contraction factor under quadratic growth with modulus mu.
inline double bound_linear_growth(const theory_params& tp) {
  if (!(tp.mu > 0)) throw std::invalid_argument("bound_linear_growth: mu must be positive");
  const double norm = tp.norm_pam();
  const double pi = tp.pi_bar();
  const double rho = (tp.mu / (2.0 * norm * pi) <= 1.0)
                         ? tp.mu / (4.0 * norm)
                         : pi * (1.0 - pi * norm / tp.mu);
  return 1.0 - (1.0 - tp.eta) * tp.gamma * rho;
}

// Sharper contraction under optimal-set strong convexity.
inline double bound_linear_ossc(const theory_params& tp) {
  if (!(tp.mu > 0)) throw std::invalid_argument("bound_linear_ossc: mu must be positive");
  double worst = 0;
  for (index_t i = 0; i < tp.blocks(); ++i)
    worst = std::max(worst, tp.big_m[i] / (tp.mu * tp.alpha_bar[i] * tp.p[i]));
  const double rho = 1.0 / (1.0 / tp.pi_bar() + worst);
  return 1.0 - (1.0 - tp.eta) * tp.gamma * rho;
}

// Converts a metric-step norm into a bound on the unit-metric stationarity
// measure: M (1 + 1/m + sqrt(1 - 2/M + 1/m^2)) / 2, max(c, 1) at m = M = c.
inline double step_to_g_factor(double m, double big_m) {
  return big_m * (1.0 + 1.0 / m + std::sqrt(1.0 - 2.0 / big_m + 1.0 / (m * m))) / 2.0;
}

struct nonconvex_bounds {
  double min_alpha_q = 0;  // bound on min_k |E[alpha Q]|
  double min_g_sq = 0;     // bound on min_k E||G_k||^2
};

inline nonconvex_bounds bound_nonconvex(const theory_params& tp, long long t) {
  if (t < 0) throw std::invalid_argument("bound_nonconvex: T must be >= 0");
  nonconvex_bounds out;
  const double horizon = static_cast<double>(t) + 1.0;
  out.min_alpha_q = tp.f0_gap / (tp.gamma * horizon);
  double worst = 0;
  for (index_t i = 0; i < tp.blocks(); ++i) {
    const double f = 2.0 * step_to_g_factor(tp.m[i], tp.big_m[i]);
    worst = std::max(worst, f * f / (tp.p[i] * tp.alpha_bar[i] * tp.m[i]));
  }
  out.min_g_sq = tp.f0_gap / (2.0 * (1.0 - tp.eta) * tp.gamma * horizon) * worst;
  return out;
}

// Unit-step specialization: min_k E||G_k||^2 <= 2 gap0 max_i(L_i/p_i) /
// ((1-eta)(T+1)); max L_i/p_i equals N L_max under uniform and N L_avg under
// Lipschitz sampling.
inline double rcd_unit_g_sq_bound(const vector_t& lip, const vector_t& p, double eta,
                                  double f0_gap, long long t) {
  double worst = 0;
  for (index_t i = 0; i < lip.size(); ++i) worst = std::max(worst, lip[i] / p[i]);
  return 2.0 * f0_gap * worst / ((1.0 - eta) * (static_cast<double>(t) + 1.0));
}

// Short-step OSSC contraction: 1 - (1-eta)(1 + 1/mu)^{-1} / (N L), with
// L = L_max (uniform) or L_avg (Lipschitz sampling).
inline double rcd_short_ossc_factor(index_t n, double lip, double mu, double eta) {
  return 1.0 - (1.0 - eta) / ((1.0 + 1.0 / mu) * static_cast<double>(n) * lip);
}

// Iteration-count scale for reaching an eps-accurate expected objective under
// OSSC; the O-constant is taken as 1.
inline double rcd_unit_ossc_complexity(index_t n, double lip, double mu, double eta, double eps) {
  return static_cast<double>(n) * lip / ((1.0 - eta) * mu) * std::log(1.0 / eps);
}

struct r0_estimate {
  double lower = 0;  // distance actually observed
  double upper = 0;  // level-set radius bound from the growth inequality
};

// R0 bounds the optimal-set distance over the initial level set.  The lower
// proxy is ||x0 - x*||; with a growth modulus mu the upper proxy
// sqrt(2 (F(x0) - F(x*)) / mu) dominates it and is what bound evaluators use.
inline r0_estimate estimate_R0(const composite_problem& prob, const vector_t& x0,
                               const vector_t& x_star, double mu = 0) {
  r0_estimate out;
  out.lower = (x0 - x_star).norm();
  if (mu > 0) {
    const double gap = objective(prob, x0) - objective(prob, x_star);
    out.upper = std::sqrt(std::max(0.0, 2.0 * gap / mu));
  } else {
    out.upper = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace vmbcd
