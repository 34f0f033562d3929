// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Core>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fracprox {

/// Contiguous partition of coordinates 0..n-1 into ordered blocks. Block i
/// covers [offset(i), offset(i) + size(i)).
class BlockPartition {
 public:
  explicit BlockPartition(std::vector<Eigen::Index> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) {
      throw std::invalid_argument("BlockPartition: no blocks");
    }
    offsets_.reserve(sizes_.size());
    Eigen::Index acc = 0;
    for (Eigen::Index s : sizes_) {
      if (s < 1) throw std::invalid_argument("BlockPartition: block size must be >= 1");
      offsets_.push_back(acc);
      acc += s;
    }
    dimension_ = acc;
  }

  /// n coordinates split into `blocks` contiguous chunks of near-equal size;
  /// the remainder is spread over the leading blocks.
  static BlockPartition uniform(Eigen::Index n, int blocks) {
    if (blocks < 1 || n < blocks) {
      throw std::invalid_argument("BlockPartition::uniform: need 1 <= blocks <= n");
    }
    std::vector<Eigen::Index> sizes(static_cast<std::size_t>(blocks), n / blocks);
    for (Eigen::Index i = 0; i < n % blocks; ++i) sizes[static_cast<std::size_t>(i)] += 1;
    return BlockPartition(std::move(sizes));
  }

  int count() const { return static_cast<int>(sizes_.size()); }
  Eigen::Index dimension() const { return dimension_; }
  Eigen::Index size(int block) const { return sizes_[static_cast<std::size_t>(block)]; }
  Eigen::Index offset(int block) const { return offsets_[static_cast<std::size_t>(block)]; }

 private:
  std::vector<Eigen::Index> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index dimension_ = 0;
};

}  // namespace fracprox
