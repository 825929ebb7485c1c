#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vmbcd/rng.hpp"
#include "vmbcd/sparse_matrix.hpp"

namespace vmbcd {

enum class label_kind { regression, sign };

// Dense Gaussian design with per-block column rescaling.  scale_profile gives
// the exact Euclidean norm of every column in block i (cycled if shorter than
// the block count), which pins the per-block Lipschitz spread of the problem.
struct synth_spec {
  std::uint64_t seed = 1;
  index_t rows = 100;
  index_t cols = 50;
  index_t block_size = 1;
  std::vector<double> scale_profile = {1.0};
  double noise_sigma = 0.01;
  double support_fraction = 0.1;
  label_kind labels = label_kind::regression;
  bool bias_column = false;
};

struct synth_problem {
  dataset data;
  vector_t planted;  // the x used to generate labels
};

inline synth_problem synth_regression(const synth_spec& spec) {
  if (spec.rows <= 0 || spec.cols <= 0)
    throw std::invalid_argument("synth_regression: dimensions must be positive");
  if (spec.scale_profile.empty())
    throw std::invalid_argument("synth_regression: empty scale profile");
  for (double s : spec.scale_profile)
    if (s <= 0) throw std::invalid_argument("synth_regression: scales must be positive");

  const index_t cols = spec.cols + (spec.bias_column ? 1 : 0);
  block_partition part = make_partition(cols, spec.block_size);
  std::vector<triplet> entries;
  entries.reserve(static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(cols));
  for (index_t j = 0; j < spec.cols; ++j) {
    rng col_gen(spec.seed, 0x100000000ull + static_cast<std::uint64_t>(j));
    vector_t col(spec.rows);
    for (index_t r = 0; r < spec.rows; ++r) col[r] = col_gen.next_normal();
    const double target =
        spec.scale_profile[static_cast<std::size_t>(part.block_of(j)) % spec.scale_profile.size()];
    col *= target / col.norm();
    for (index_t r = 0; r < spec.rows; ++r) entries.push_back({r, j, col[r]});
  }
  if (spec.bias_column)
    for (index_t r = 0; r < spec.rows; ++r) entries.push_back({r, spec.cols, 1.0});

  rng plant_gen(spec.seed, 0x200000000ull);
  vector_t planted = vector_t::Zero(cols);
  for (index_t j = 0; j < spec.cols; ++j)
    if (plant_gen.next_double() < spec.support_fraction)
      planted[j] = plant_gen.next_double() < 0.5 ? -1.0 : 1.0;
  if (planted.isZero()) planted[0] = 1.0;

  blocked_sparse_matrix a(spec.rows, cols, std::move(entries), std::move(part));
  vector_t b = a.multiply(planted);
  rng noise_gen(spec.seed, 0x300000000ull);
  if (spec.noise_sigma > 0)
    for (index_t r = 0; r < spec.rows; ++r) b[r] += spec.noise_sigma * noise_gen.next_normal();
  if (spec.labels == label_kind::sign)
    for (index_t r = 0; r < spec.rows; ++r) b[r] = b[r] >= 0 ? 1.0 : -1.0;
  return {dataset{std::move(a), std::move(b)}, std::move(planted)};
}

}  // namespace vmbcd
