#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "test_util.hpp"

namespace {

using namespace vmbcd;

vector_t vec(std::initializer_list<double> v) {
  vector_t out(static_cast<index_t>(v.size()));
  index_t j = 0;
  for (double x : v) out[j++] = x;
  return out;
}

TEST(distribution, uniform) {
  const block_distribution d = uniform_dist(4);
  for (index_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(d.p[i], 0.25);
  EXPECT_THROW(uniform_dist(0), std::invalid_argument);
}

TEST(distribution, lipschitz_proportional) {
  const block_distribution d = lipschitz_dist(vec({1, 3}));
  EXPECT_DOUBLE_EQ(d.p[0], 0.25);
  EXPECT_DOUBLE_EQ(d.p[1], 0.75);
  EXPECT_THROW(lipschitz_dist(vec({1, 0})), std::invalid_argument);
  EXPECT_THROW(lipschitz_dist(vec({1, -2})), std::invalid_argument);
}

TEST(distribution, optimal_weights) {
  const block_distribution d = optimal_dist(vec({2, 2}), vec({1, 0.5}));
  EXPECT_NEAR(d.p[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.p[1], 2.0 / 3.0, 1e-15);
  EXPECT_THROW(optimal_dist(vec({2}), vec({1, 1})), std::invalid_argument);
  EXPECT_THROW(optimal_dist(vec({2, 2}), vec({1, 1.5})), std::invalid_argument);
  EXPECT_THROW(optimal_dist(vec({2, 2}), vec({1, 0})), std::invalid_argument);
}

TEST(distribution, rejects_non_simplex) {
  EXPECT_THROW(block_distribution(vec({0.5, 0.4})), std::invalid_argument);
  EXPECT_THROW(block_distribution(vec({0.5, 0.6})), std::invalid_argument);
  EXPECT_THROW(block_distribution(vector_t{}), std::invalid_argument);
}

TEST(alias, uniform_is_all_self_buckets) {
  const alias_table t = alias_init(uniform_dist(5));
  ASSERT_EQ(t.buckets(), 5);
  std::vector<index_t> seen;
  for (index_t j = 0; j < 5; ++j) {
    EXPECT_DOUBLE_EQ(t.threshold[static_cast<std::size_t>(j)], 1.0);
    EXPECT_EQ(t.upper[static_cast<std::size_t>(j)], t.lower[static_cast<std::size_t>(j)]);
    seen.push_back(t.lower[static_cast<std::size_t>(j)]);
  }
  std::sort(seen.begin(), seen.end());
  for (index_t j = 0; j < 5; ++j) EXPECT_EQ(seen[static_cast<std::size_t>(j)], j);
}

TEST(alias, two_point_structure) {
  const alias_table t = alias_init(block_distribution(vec({0.75, 0.25})));
  ASSERT_EQ(t.buckets(), 2);
  // first bucket pairs the small index 1 with donor 0 at threshold 1/2; the
  // donor's leftover mass is exactly one bucket and self-pairs at threshold 1
  EXPECT_EQ(t.lower[0], 1);
  EXPECT_EQ(t.upper[0], 0);
  EXPECT_DOUBLE_EQ(t.threshold[0], 0.5);
  EXPECT_EQ(t.lower[1], 0);
  EXPECT_DOUBLE_EQ(t.threshold[1], 1.0);
}

TEST(alias, single_block) {
  const alias_table t = alias_init(uniform_dist(1));
  rng gen(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(alias_sample(t, gen), 0);
}

TEST(alias, reconstruction_error_small) {
  const block_distribution d7 =
      block_distribution(vec({0.05, 0.3, 0.05, 0.25, 0.15, 0.1, 0.1}));
  EXPECT_LE(alias_reconstruction_error(alias_init(d7), d7), 1e-12);
  rng gen(123);
  for (int rep = 0; rep < 100; ++rep) {
    const index_t n = 1 + static_cast<index_t>(gen.next_index(1000));
    vector_t w(n);
    for (index_t i = 0; i < n; ++i) w[i] = 1e-3 + gen.next_double();
    const block_distribution d = lipschitz_dist(w);
    EXPECT_LE(alias_reconstruction_error(alias_init(d), d), 1e-12) << "n=" << n;
  }
}

TEST(alias, skewed_distribution_reconstructs) {
  vector_t w(50);
  for (index_t i = 0; i < 50; ++i) w[i] = std::pow(10.0, static_cast<double>(i % 10));
  const block_distribution d = lipschitz_dist(w);
  EXPECT_LE(alias_reconstruction_error(alias_init(d), d), 1e-12);
}

TEST(alias, unit_threshold_never_consults_upper) {
  // next_double < 1 always holds, so threshold-1 buckets resolve to lower;
  // the tail paths of the construction rely on this.
  const alias_table t = alias_init(uniform_dist(3));
  for (index_t j = 0; j < t.buckets(); ++j)
    if (t.threshold[static_cast<std::size_t>(j)] == 1.0)
      EXPECT_EQ(t.upper[static_cast<std::size_t>(j)], t.lower[static_cast<std::size_t>(j)]);
}

TEST(alias, sampling_deterministic_per_seed) {
  const alias_table t = alias_init(block_distribution(vec({0.2, 0.3, 0.5})));
  rng a(77), b(77);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(alias_sample(t, a), alias_sample(t, b));
}

TEST(alias, empirical_frequencies_match) {
  const block_distribution d = block_distribution(vec({0.1, 0.25, 0.4, 0.25 - 0.05, 0.05}));
  const alias_table t = alias_init(d);
  rng gen(2024);
  const int draws = 1000000;
  std::vector<long long> count(5, 0);
  for (int i = 0; i < draws; ++i) ++count[static_cast<std::size_t>(alias_sample(t, gen))];
  for (index_t i = 0; i < 5; ++i) {
    const double freq = static_cast<double>(count[static_cast<std::size_t>(i)]) / draws;
    // 3.3 sigma at p = 0.4 over 1e6 draws is ~0.0016
    EXPECT_NEAR(freq, d.p[i], 0.0017) << "block " << i;
  }
}

TEST(alias, chi_square_goodness_of_fit) {
  const boost::math::chi_squared chi(15.0);
  rng meta(31415);
  for (int rep = 0; rep < 10; ++rep) {
    vector_t w(16);
    for (index_t i = 0; i < 16; ++i) w[i] = 0.05 + meta.next_double();
    const block_distribution d = lipschitz_dist(w);
    const alias_table t = alias_init(d);
    rng gen(1000 + static_cast<std::uint64_t>(rep));
    const int draws = 1000000;
    std::vector<long long> count(16, 0);
    for (int i = 0; i < draws; ++i) ++count[static_cast<std::size_t>(alias_sample(t, gen))];
    double stat = 0;
    for (index_t i = 0; i < 16; ++i) {
      const double expected = d.p[i] * draws;
      const double diff = static_cast<double>(count[static_cast<std::size_t>(i)]) - expected;
      stat += diff * diff / expected;
    }
    const double p_value = boost::math::cdf(boost::math::complement(chi, stat));
    EXPECT_GT(p_value, 0.001) << "rep " << rep << " stat " << stat;
  }
}

TEST(alias, construction_scales_linearly) {
  auto build_time = [](index_t n) {
    vector_t w(n);
    rng gen(5);
    for (index_t i = 0; i < n; ++i) w[i] = 0.1 + gen.next_double();
    const block_distribution d = lipschitz_dist(w);
    double best = 1e100;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const alias_table t = alias_init(d);
      const auto t1 = std::chrono::steady_clock::now();
      if (t.buckets() != n) throw std::logic_error("bucket count");
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };
  const double small = build_time(100000);
  const double big = build_time(1000000);
  // linear predicts 10x; reject quadratic growth with a wide safety margin
  EXPECT_LT(big, 30.0 * std::max(small, 1e-4));
}

}  // namespace
