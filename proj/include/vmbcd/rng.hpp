#pragma once

#include <cmath>
#include <cstdint>

namespace vmbcd {

// Counter-based generator: the k-th draw for a given (seed, stream) pair is a
// pure function of (seed, stream, k), so sequences are reproducible bit-for-bit
// and independent of call interleaving.  std:: distributions are
// implementation-defined and are deliberately not used anywhere.
class rng {
 public:
  explicit rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

  // SplitMix64 output function applied to an incrementing counter.
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; exactly two draws per call, u1 in (0, 1].
  double next_normal() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n); fine for n << 2^53.
  std::uint64_t next_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace vmbcd
