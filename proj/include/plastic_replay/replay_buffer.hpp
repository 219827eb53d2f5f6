#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plastic_replay/error.hpp"

namespace plastic_replay {

using Observation = std::vector<double>;

/// One environment transition plus the global environment step at which it
/// was collected. The timestamp is what age-based samplers key on.
template <typename Action = std::int64_t>
struct TimestampedTransition {
  Observation state;
  Action action{};
  double reward = 0.0;
  Observation next_state;
  bool done = false;
  std::uint64_t timestamp = 0;

  friend bool operator==(const TimestampedTransition&,
                         const TimestampedTransition&) = default;
};

using Transition = TimestampedTransition<>;

/// Read-only view of the age bookkeeping of a buffer. Samplers work on this
/// so they never depend on the transition payload type.
///
/// Slots are physical. Logical (age) order starts at `head`, oldest first,
/// and wraps around.
struct BufferView {
  std::span<const std::uint64_t> timestamps;
  std::size_t head = 0;
  std::uint64_t now = 0;
  std::uint64_t push_count = 0;

  std::size_t size() const noexcept { return timestamps.size(); }
  bool empty() const noexcept { return timestamps.empty(); }

  std::size_t physical(std::size_t logical) const noexcept {
    const std::size_t p = head + logical;
    return p < size() ? p : p - size();
  }

  std::uint64_t age_at_slot(std::size_t slot) const noexcept {
    return now - timestamps[slot];
  }
  std::uint64_t age_at_logical(std::size_t logical) const noexcept {
    return now - timestamps[physical(logical)];
  }
};

/// Fixed-capacity FIFO ring of timestamped transitions.
///
/// Insertion must be monotone in timestamp, so the oldest live entry is
/// always the one with the smallest timestamp and is the one overwritten
/// when the ring is full.
template <typename T = Transition>
class ReplayBuffer {
 public:
  using value_type = T;

  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    entries_.reserve(capacity);
    timestamps_.reserve(capacity);
  }

  /// Stores `tr` and returns its physical slot.
  std::size_t push(T tr) {
    if (!entries_.empty() && tr.timestamp < newest_timestamp_) {
      throw OrderingError("non-monotone timestamp " + std::to_string(tr.timestamp) +
                          " after " + std::to_string(newest_timestamp_));
    }
    newest_timestamp_ = tr.timestamp;
    if (tr.timestamp > global_step_) global_step_ = tr.timestamp;
    ++push_count_;

    std::size_t slot;
    if (entries_.size() < capacity_) {
      slot = entries_.size();
      timestamps_.push_back(tr.timestamp);
      entries_.push_back(std::move(tr));
    } else {
      slot = cursor_;
      timestamps_[slot] = tr.timestamp;
      entries_[slot] = std::move(tr);
    }
    cursor_ = (slot + 1) % capacity_;
    return slot;
  }

  /// Moves the clock forward without inserting anything.
  void advance_to(std::uint64_t now) {
    if (now < global_step_) {
      throw OrderingError("clock cannot move backwards from " +
                          std::to_string(global_step_) + " to " + std::to_string(now));
    }
    global_step_ = now;
  }

  const T& get(std::size_t slot) const {
    if (slot >= entries_.size()) {
      throw BoundsError("slot " + std::to_string(slot) + " out of range for size " +
                        std::to_string(entries_.size()));
    }
    return entries_[slot];
  }

  const T& at_logical(std::size_t logical) const {
    if (logical >= entries_.size()) {
      throw BoundsError("logical index " + std::to_string(logical) +
                        " out of range for size " + std::to_string(entries_.size()));
    }
    return entries_[view().physical(logical)];
  }

  /// Ages relative to `now`, oldest first.
  std::vector<std::uint64_t> ages(std::uint64_t now) const {
    if (!entries_.empty() && now < newest_timestamp_) {
      throw PreconditionError("now=" + std::to_string(now) +
                              " precedes stored timestamp " +
                              std::to_string(newest_timestamp_));
    }
    const BufferView v = view();
    std::vector<std::uint64_t> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = now - v.timestamps[v.physical(i)];
    return out;
  }
  std::vector<std::uint64_t> ages() const { return ages(global_step_); }

  BufferView view() const noexcept {
    return BufferView{std::span<const std::uint64_t>(timestamps_), head(), global_step_,
                      push_count_};
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return entries_.empty(); }
  bool full() const noexcept { return entries_.size() == capacity_; }
  std::uint64_t global_step() const noexcept { return global_step_; }
  std::uint64_t push_count() const noexcept { return push_count_; }
  std::size_t write_cursor() const noexcept { return cursor_; }

 private:
  std::size_t head() const noexcept { return full() ? cursor_ : 0; }

  std::size_t capacity_;
  std::vector<T> entries_;
  std::vector<std::uint64_t> timestamps_;
  std::size_t cursor_ = 0;
  std::uint64_t global_step_ = 0;
  std::uint64_t newest_timestamp_ = 0;
  std::uint64_t push_count_ = 0;
};

}  // namespace plastic_replay
