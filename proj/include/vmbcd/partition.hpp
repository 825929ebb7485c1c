#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace vmbcd {

using index_t = Eigen::Index;

// Contiguous partition of coordinates 0..n-1 into blocks.  offsets has one
// entry per block boundary: block i covers [offsets[i], offsets[i+1]).
class block_partition {
 public:
  block_partition() = default;

  explicit block_partition(std::vector<index_t> offsets)
      : offsets_(std::move(offsets)) {
    if (offsets_.size() < 2 || offsets_.front() != 0)
      throw std::invalid_argument("block_partition: offsets must start at 0");
    for (std::size_t i = 1; i < offsets_.size(); ++i)
      if (offsets_[i] <= offsets_[i - 1])
        throw std::invalid_argument("block_partition: offsets must be strictly increasing");
  }

  index_t blocks() const { return static_cast<index_t>(offsets_.size()) - 1; }
  index_t dim() const { return offsets_.back(); }
  index_t begin(index_t i) const { return offsets_[static_cast<std::size_t>(i)]; }
  index_t end(index_t i) const { return offsets_[static_cast<std::size_t>(i) + 1]; }
  index_t size(index_t i) const { return end(i) - begin(i); }

  // Block containing coordinate j (binary search over boundaries).
  index_t block_of(index_t j) const {
    index_t lo = 0, hi = blocks() - 1;
    while (lo < hi) {
      index_t mid = (lo + hi) / 2;
      if (j < end(mid)) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

  const std::vector<index_t>& offsets() const { return offsets_; }

 private:
  std::vector<index_t> offsets_;
};

// Equal-size blocks of the given size; the last block takes the remainder.
// n = 12, size = 5 gives blocks of sizes (5, 5, 2).
inline block_partition make_partition(index_t n, index_t block_size) {
  if (n <= 0) throw std::invalid_argument("make_partition: n must be positive");
  if (block_size <= 0) throw std::invalid_argument("make_partition: block size must be positive");
  std::vector<index_t> offsets;
  offsets.reserve(static_cast<std::size_t>(n / block_size) + 2);
  for (index_t j = 0; j < n; j += block_size) offsets.push_back(j);
  offsets.push_back(n);
  return block_partition(std::move(offsets));
}

}  // namespace vmbcd
