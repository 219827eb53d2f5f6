#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "plastic_replay/decay.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/replay_buffer.hpp"
#include "plastic_replay/rng.hpp"

namespace plastic_replay {

/// p_i = w_i / sum_j w_j, order preserved.
inline std::vector<double> normalized_probabilities(std::span<const double> weights) {
  if (weights.empty()) throw EmptyBufferError("cannot normalize an empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw DomainError("weights must be finite and strictly positive");
    total += w;
  }
  std::vector<double> p(weights.size());
  std::transform(weights.begin(), weights.end(), p.begin(),
                 [total](double w) { return w / total; });
  return p;
}

/// Decay weight of every live entry, indexed by physical slot.
inline void compute_weights(const BufferView& view, const DecaySchedule& schedule,
                            std::vector<double>& out) {
  out.resize(view.size());
  for (std::size_t i = 0; i < view.size(); ++i)
    out[i] = decay_weight(schedule, view.age_at_slot(i));
}

/// Index of the first inclusive prefix sum strictly greater than `target`.
inline std::size_t find_in_prefix(std::span<const double> prefix, double target) {
  auto it = std::upper_bound(prefix.begin(), prefix.end(), target);
  if (it == prefix.end()) --it;  // target rounded onto the total
  return static_cast<std::size_t>(it - prefix.begin());
}

/// `batch` i.i.d. draws, with replacement, from Categorical(weights / sum).
/// One uniform01 per draw, scaled by the total and located in the prefix
/// sums; with all-equal weights this reduces to floor(u * N).
inline std::vector<std::size_t> sample_categorical(std::span<const double> weights,
                                                   std::size_t batch, Rng& rng,
                                                   std::vector<double>& prefix_scratch) {
  if (weights.empty()) throw EmptyBufferError("cannot sample from an empty distribution");
  prefix_scratch.resize(weights.size());
  std::partial_sum(weights.begin(), weights.end(), prefix_scratch.begin());
  const double total = prefix_scratch.back();
  std::vector<std::size_t> out(batch);
  for (auto& idx : out) idx = find_in_prefix(prefix_scratch, uniform01(rng) * total);
  return out;
}

inline std::vector<std::size_t> sample_categorical(std::span<const double> weights,
                                                   std::size_t batch, Rng& rng) {
  std::vector<double> prefix;
  return sample_categorical(weights, batch, rng, prefix);
}

/// Exact age-weighted batch: O(N) weights and prefix sums, then
/// O(batch log N) draws. Returns physical slots.
inline std::vector<std::size_t> sample_batch_exact(const BufferView& view,
                                                   const DecaySchedule& schedule,
                                                   std::size_t batch, Rng& rng) {
  if (view.empty()) throw EmptyBufferError("cannot sample from an empty buffer");
  std::vector<double> weights;
  compute_weights(view, schedule, weights);
  return sample_categorical(weights, batch, rng, weights);  // prefix sums in place
}

template <typename T>
std::vector<std::size_t> sample_batch_exact(const ReplayBuffer<T>& buffer,
                                            const DecaySchedule& schedule,
                                            std::size_t batch, Rng& rng) {
  return sample_batch_exact(buffer.view(), schedule, batch, rng);
}

/// floor(u * N) per draw; the same uniform stream as sample_categorical.
inline std::vector<std::size_t> sample_batch_uniform(const BufferView& view,
                                                     std::size_t batch, Rng& rng) {
  if (view.empty()) throw EmptyBufferError("cannot sample from an empty buffer");
  const double n = static_cast<double>(view.size());
  std::vector<std::size_t> out(batch);
  for (auto& idx : out)
    idx = std::min(view.size() - 1, static_cast<std::size_t>(uniform01(rng) * n));
  return out;
}

}  // namespace plastic_replay
