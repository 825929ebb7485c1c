#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "vmbcd/rng.hpp"
#include "vmbcd/sparse_matrix.hpp"

namespace vmbcd {

// Discrete distribution over blocks; strictly positive, sums to 1 within 1e-12.
struct block_distribution {
  vector_t p;

  explicit block_distribution(vector_t probs) : p(std::move(probs)) {
    if (p.size() == 0) throw std::invalid_argument("block_distribution: empty");
    double sum = 0, comp = 0;
    for (index_t i = 0; i < p.size(); ++i) {
      if (!(p[i] > 0)) throw std::invalid_argument("block_distribution: probabilities must be positive");
      const double y = p[i] - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("block_distribution: probabilities must sum to 1");
  }

  index_t blocks() const { return p.size(); }
};

inline block_distribution uniform_dist(index_t n) {
  if (n < 1) throw std::invalid_argument("uniform_dist: need at least one block");
  return block_distribution(vector_t::Constant(n, 1.0 / static_cast<double>(n)));
}

inline block_distribution lipschitz_dist(const vector_t& l) {
  double sum = 0, comp = 0;
  for (index_t i = 0; i < l.size(); ++i) {
    if (!(l[i] > 0)) throw std::invalid_argument("lipschitz_dist: constants must be positive");
    const double y = l[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return block_distribution(l / sum);
}

// p_i proportional to M_i / alpha_bar_i: minimizes the norm that drives the
// sublinear-phase constant.
inline block_distribution optimal_dist(const vector_t& m, const vector_t& alpha_bar) {
  if (m.size() != alpha_bar.size()) throw std::invalid_argument("optimal_dist: size mismatch");
  vector_t w(m.size());
  for (index_t i = 0; i < m.size(); ++i) {
    if (!(m[i] > 0)) throw std::invalid_argument("optimal_dist: M must be positive");
    if (!(alpha_bar[i] > 0) || alpha_bar[i] > 1.0)
      throw std::invalid_argument("optimal_dist: alpha_bar must lie in (0,1]");
    w[i] = m[i] / alpha_bar[i];
  }
  return lipschitz_dist(w);
}

// Walker/Vose alias structure: bucket j holds mass 1/N split between lower_j
// (share threshold_j) and upper_j (the rest).
struct alias_table {
  std::vector<index_t> upper;
  std::vector<index_t> lower;
  std::vector<double> threshold;

  index_t buckets() const { return static_cast<index_t>(threshold.size()); }
};

// Two-list pairing of above- and below-average masses.  Residual masses left
// when either list empties are exactly 1/N in exact arithmetic and become
// threshold-1 buckets pointing at themselves.  Per-entry compensated updates
// keep the reconstruction error at the 1e-12 scale.
inline alias_table alias_init(const block_distribution& dist) {
  const index_t n = dist.blocks();
  std::vector<double> mass(static_cast<std::size_t>(n));
  std::vector<double> comp(static_cast<std::size_t>(n), 0.0);
  std::vector<index_t> small, large;
  for (index_t i = 0; i < n; ++i) {
    mass[static_cast<std::size_t>(i)] = dist.p[i] * static_cast<double>(n);
    (mass[static_cast<std::size_t>(i)] <= 1.0 ? small : large).push_back(i);
  }
  alias_table t;
  t.upper.reserve(static_cast<std::size_t>(n));
  t.lower.reserve(static_cast<std::size_t>(n));
  t.threshold.reserve(static_cast<std::size_t>(n));
  auto emit = [&](index_t up, index_t lo, double thr) {
    t.upper.push_back(up);
    t.lower.push_back(lo);
    t.threshold.push_back(std::min(1.0, std::max(0.0, thr)));
  };
  while (!small.empty()) {
    const index_t lo = small.back();
    small.pop_back();
    const double lo_mass = mass[static_cast<std::size_t>(lo)] - comp[static_cast<std::size_t>(lo)];
    if (large.empty()) {
      emit(lo, lo, 1.0);
      continue;
    }
    const index_t up = large.back();
    large.pop_back();
    emit(up, lo, lo_mass);
    // mass[up] -= (1 - lo_mass), Neumaier-compensated per entry.
    const double y = -(1.0 - lo_mass) - comp[static_cast<std::size_t>(up)];
    const double s = mass[static_cast<std::size_t>(up)] + y;
    comp[static_cast<std::size_t>(up)] =
        (s - mass[static_cast<std::size_t>(up)]) - y;
    mass[static_cast<std::size_t>(up)] = s;
    (mass[static_cast<std::size_t>(up)] - comp[static_cast<std::size_t>(up)] <= 1.0 ? small : large)
        .push_back(up);
  }
  while (!large.empty()) {
    emit(large.back(), large.back(), 1.0);
    large.pop_back();
  }
  return t;
}

// Two independent uniforms: one picks the bucket, one resolves the
// lower/upper split against the threshold.  Exact for any threshold value.
inline index_t alias_sample(const alias_table& t, rng& gen) {
  const index_t n = t.buckets();
  const index_t j = std::min<index_t>(n - 1, static_cast<index_t>(gen.next_double() * static_cast<double>(n)));
  return gen.next_double() < t.threshold[static_cast<std::size_t>(j)]
             ? t.lower[static_cast<std::size_t>(j)]
             : t.upper[static_cast<std::size_t>(j)];
}

// Max over blocks of |reconstructed p_i - p_i|; the construction invariant.
inline double alias_reconstruction_error(const alias_table& t, const block_distribution& dist) {
  const index_t n = dist.blocks();
  std::vector<double> rec(static_cast<std::size_t>(n), 0.0);
  std::vector<double> comp(static_cast<std::size_t>(n), 0.0);
  auto add = [&](index_t i, double v) {
    const double y = v - comp[static_cast<std::size_t>(i)];
    const double s = rec[static_cast<std::size_t>(i)] + y;
    comp[static_cast<std::size_t>(i)] = (s - rec[static_cast<std::size_t>(i)]) - y;
    rec[static_cast<std::size_t>(i)] = s;
  };
  const double w = 1.0 / static_cast<double>(n);
  for (index_t j = 0; j < t.buckets(); ++j) {
    add(t.lower[static_cast<std::size_t>(j)], w * t.threshold[static_cast<std::size_t>(j)]);
    add(t.upper[static_cast<std::size_t>(j)], w * (1.0 - t.threshold[static_cast<std::size_t>(j)]));
  }
  double err = 0;
  for (index_t i = 0; i < n; ++i)
    err = std::max(err, std::abs(rec[static_cast<std::size_t>(i)] - dist.p[i]));
  return err;
}

}  // namespace vmbcd
