#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "plastic_replay/decay.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/replay_buffer.hpp"
#include "plastic_replay/rng.hpp"
#include "plastic_replay/sampling.hpp"

namespace plastic_replay {

/// Fraction of the covered entries that may be pushed after a rebuild
/// before sampling from the index is refused.
inline constexpr double kDefaultStalenessBudget = 0.05;

/// B contiguous age-ordered buckets whose total weight is estimated from
/// the weight of the bucket's median entry.
///
/// Weights are monotone in age, so within a bucket the median weight times
/// the bucket size is exact whenever the weights form an arithmetic run
/// (linear decay away from the clamp) and close to exact otherwise.
struct BucketIndex {
  std::size_t bucket_count = 0;
  /// B+1 logical positions, oldest first, over the `covered` entries.
  std::vector<std::size_t> boundaries;
  std::vector<double> bucket_totals;
  std::size_t covered = 0;
  std::uint64_t push_count = 0;
  std::uint64_t now = 0;

  std::size_t bucket_size(std::size_t j) const { return boundaries[j + 1] - boundaries[j]; }
};

/// Weight of a bucket's median entry; for even sizes the mean of the two
/// central weights.
inline double bucket_median_weight(const BufferView& view, const DecaySchedule& schedule,
                                   std::size_t lo, std::size_t hi) {
  const std::size_t m = hi - lo;
  const std::size_t mid = lo + m / 2;
  const double upper = decay_weight(schedule, view.age_at_logical(mid));
  if (m % 2 == 1) return upper;
  const double lower = decay_weight(schedule, view.age_at_logical(mid - 1));
  return 0.5 * (lower + upper);
}

/// O(B) weight evaluations: only the median entries are weighed.
inline BucketIndex bucket_rebuild(const BufferView& view, const DecaySchedule& schedule,
                                  std::size_t bucket_count) {
  if (bucket_count == 0) throw ConfigError("bucket count must be positive");
  if (view.empty()) throw EmptyBufferError("cannot build buckets over an empty buffer");
  const std::size_t n = view.size();
  if (bucket_count > n)
    throw ConfigError("bucket count " + std::to_string(bucket_count) +
                      " exceeds buffer size " + std::to_string(n));

  BucketIndex idx;
  idx.bucket_count = bucket_count;
  idx.covered = n;
  idx.push_count = view.push_count;
  idx.now = view.now;
  idx.boundaries.resize(bucket_count + 1);
  idx.bucket_totals.resize(bucket_count);
  // floor(j*N/B) gives sizes floor(N/B) or ceil(N/B).
  for (std::size_t j = 0; j <= bucket_count; ++j)
    idx.boundaries[j] = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(j) * n) / bucket_count);
  for (std::size_t j = 0; j < bucket_count; ++j) {
    const std::size_t lo = idx.boundaries[j], hi = idx.boundaries[j + 1];
    idx.bucket_totals[j] =
        bucket_median_weight(view, schedule, lo, hi) * static_cast<double>(hi - lo);
  }
  return idx;
}

template <typename T>
BucketIndex bucket_rebuild(const ReplayBuffer<T>& buffer, const DecaySchedule& schedule,
                           std::size_t bucket_count) {
  return bucket_rebuild(buffer.view(), schedule, bucket_count);
}

inline bool bucket_index_stale(const BucketIndex& idx, const BufferView& view,
                               double budget = kDefaultStalenessBudget) {
  if (view.size() < idx.covered || view.push_count < idx.push_count) return true;
  const auto allowed =
      static_cast<std::uint64_t>(std::floor(budget * static_cast<double>(idx.covered)));
  return view.push_count - idx.push_count > allowed;
}

/// Bucket ~ Categorical(bucket_totals), then a uniform entry inside it.
/// Cost O(B + batch). Returns physical slots.
///
/// Positions are anchored at the newest end: after d pushes into a growing
/// buffer the oldest d entries are left out, and in a full buffer every
/// position keeps (roughly) the age it had at rebuild.
inline std::vector<std::size_t> sample_batch_bucketed(const BucketIndex& idx,
                                                      const BufferView& view,
                                                      std::size_t batch, Rng& rng,
                                                      double budget = kDefaultStalenessBudget) {
  if (view.empty()) throw EmptyBufferError("cannot sample from an empty buffer");
  if (bucket_index_stale(idx, view, budget))
    throw StalenessError("bucket index is stale: " +
                         std::to_string(view.push_count - idx.push_count) +
                         " pushes since rebuild over " + std::to_string(idx.covered) +
                         " covered entries");
  const std::size_t shift = view.size() - idx.covered;
  std::vector<double> prefix(idx.bucket_count);
  std::partial_sum(idx.bucket_totals.begin(), idx.bucket_totals.end(), prefix.begin());
  const double total = prefix.back();

  std::vector<std::size_t> out(batch);
  for (auto& slot : out) {
    const std::size_t j = find_in_prefix(prefix, uniform01(rng) * total);
    const std::size_t size = idx.bucket_size(j);
    const std::size_t offset =
        std::min(size - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(size)));
    slot = view.physical(idx.boundaries[j] + offset + shift);
  }
  return out;
}

/// Per-entry sampling probability implied by the index, in logical order
/// over the covered entries.
inline std::vector<double> bucket_entry_probabilities(const BucketIndex& idx) {
  const double total =
      std::accumulate(idx.bucket_totals.begin(), idx.bucket_totals.end(), 0.0);
  std::vector<double> p(idx.covered);
  for (std::size_t j = 0; j < idx.bucket_count; ++j) {
    const double each = idx.bucket_totals[j] / total / static_cast<double>(idx.bucket_size(j));
    for (std::size_t i = idx.boundaries[j]; i < idx.boundaries[j + 1]; ++i) p[i] = each;
  }
  return p;
}

/// Exact sampling probabilities in logical order.
inline std::vector<double> exact_entry_probabilities(const BufferView& view,
                                                     const DecaySchedule& schedule) {
  std::vector<double> w(view.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = decay_weight(schedule, view.age_at_logical(i));
  return normalized_probabilities(w);
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("total variation needs equal-length vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace plastic_replay
