#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "plastic_replay/error.hpp"

namespace plastic_replay {

/// Complete binary tree of partial sums over a power-of-two number of
/// leaves. Node 1 is the root, node i has children 2i and 2i+1, and leaf j
/// lives at node leaf_count + j.
class SumTree {
 public:
  explicit SumTree(std::size_t min_leaves)
      : leaf_count_(std::bit_ceil(min_leaves == 0 ? std::size_t{1} : min_leaves)),
        nodes_(2 * leaf_count_, 0.0) {}

  std::size_t leaf_count() const noexcept { return leaf_count_; }
  double total() const noexcept { return nodes_[1]; }
  double leaf(std::size_t i) const {
    check_leaf(i);
    return nodes_[leaf_count_ + i];
  }

  /// Sets a leaf and recomputes its ancestors from their children, so no
  /// incremental error accumulates along the path.
  void update(std::size_t i, double value) {
    check_leaf(i);
    if (!(value >= 0.0) || !std::isfinite(value))
      throw DomainError("sum-tree values must be finite and non-negative");
    std::size_t node = leaf_count_ + i;
    nodes_[node] = value;
    for (node >>= 1; node >= 1; node >>= 1) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
  }

  void rebuild() {
    for (std::size_t node = leaf_count_ - 1; node >= 1; --node)
      nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
  }

  /// Leaf i with cumsum(0..i-1) <= u < cumsum(0..i). Descends right iff u is
  /// at least the left subtree sum.
  std::size_t find_prefix(double u) const {
    if (!(total() > 0.0)) throw DomainError("find_prefix on an all-zero tree");
    if (!(u >= 0.0 && u < total()))
      throw DomainError("prefix " + std::to_string(u) + " outside [0, " +
                        std::to_string(total()) + ")");
    std::size_t node = 1;
    while (node < leaf_count_) {
      const double left = nodes_[2 * node];
      if (u < left) {
        node = 2 * node;
      } else if (nodes_[2 * node + 1] > 0.0) {
        u -= left;
        node = 2 * node + 1;
      } else {
        // Rounding pushed u past an empty right subtree; take the last
        // position of the left one instead.
        u = std::nextafter(left, 0.0);
        node = 2 * node;
      }
    }
    return node - leaf_count_;
  }

 private:
  void check_leaf(std::size_t i) const {
    if (i >= leaf_count_)
      throw BoundsError("leaf " + std::to_string(i) + " out of range for " +
                        std::to_string(leaf_count_) + " leaves");
  }

  std::size_t leaf_count_;
  std::vector<double> nodes_;
};

}  // namespace plastic_replay
