#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plastic_replay/bucket_index.hpp"
#include "plastic_replay/decay.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/per.hpp"
#include "plastic_replay/replay_buffer.hpp"
#include "plastic_replay/rng.hpp"
#include "plastic_replay/sampling.hpp"
#include "plastic_replay/sum_tree.hpp"

namespace plastic_replay {

struct SampleBatch {
  std::vector<std::size_t> slots;
  /// Max-normalized importance weights; empty unless the sampler is biased
  /// and corrects for it (PER).
  std::vector<double> is_weights;
};

/// Batch-sampling strategy over the slots of one replay buffer.
///
/// on_push must be called with the returned slot after every buffer push;
/// update_priorities after every training step that produced TD errors.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual std::string_view name() const = 0;
  virtual SampleBatch sample(const BufferView& view, std::size_t batch, Rng& rng) = 0;
  virtual void on_push(std::size_t /*slot*/) {}
  virtual void update_priorities(std::span<const std::size_t> /*slots*/,
                                 std::span<const double> /*td_errors*/) {}
};

class UniformSampler final : public Sampler {
 public:
  std::string_view name() const override { return "uniform"; }
  SampleBatch sample(const BufferView& view, std::size_t batch, Rng& rng) override {
    return {sample_batch_uniform(view, batch, rng), {}};
  }
};

/// Exact Categorical draw under any decay law (SWD, SWA, exponential,
/// polynomial). Weights and prefix sums are recomputed on every call.
class DecaySampler final : public Sampler {
 public:
  DecaySampler(std::string name, DecaySchedule schedule)
      : name_(std::move(name)), schedule_(schedule) {
    schedule_.validate();
  }
  std::string_view name() const override { return name_; }
  const DecaySchedule& schedule() const noexcept { return schedule_; }

  SampleBatch sample(const BufferView& view, std::size_t batch, Rng& rng) override {
    if (view.empty()) throw EmptyBufferError("cannot sample from an empty buffer");
    compute_weights(view, schedule_, scratch_);
    return {sample_categorical(scratch_, batch, rng, scratch_), {}};
  }

 private:
  std::string name_;
  DecaySchedule schedule_;
  std::vector<double> scratch_;
};

/// Bucketed approximation of a decay sampler. The index is rebuilt when the
/// staleness budget is exhausted or a rebuild was requested.
class BucketedDecaySampler final : public Sampler {
 public:
  BucketedDecaySampler(std::string name, DecaySchedule schedule, std::size_t buckets,
                       double staleness_budget = kDefaultStalenessBudget)
      : name_(std::move(name)), schedule_(schedule), buckets_(buckets), budget_(staleness_budget) {
    schedule_.validate();
    if (buckets == 0) throw ConfigError("bucket count must be positive");
  }
  std::string_view name() const override { return name_; }

  void request_rebuild() noexcept { rebuild_requested_ = true; }
  std::uint64_t rebuild_count() const noexcept { return rebuilds_; }
  const std::optional<BucketIndex>& index() const noexcept { return index_; }

  SampleBatch sample(const BufferView& view, std::size_t batch, Rng& rng) override {
    if (view.empty()) throw EmptyBufferError("cannot sample from an empty buffer");
    if (rebuild_requested_ || !index_ || bucket_index_stale(*index_, view, budget_)) {
      index_ = bucket_rebuild(view, schedule_, std::min(buckets_, view.size()));
      rebuild_requested_ = false;
      ++rebuilds_;
    }
    return {sample_batch_bucketed(*index_, view, batch, rng, budget_), {}};
  }

 private:
  std::string name_;
  DecaySchedule schedule_;
  std::size_t buckets_;
  double budget_;
  std::optional<BucketIndex> index_;
  bool rebuild_requested_ = false;
  std::uint64_t rebuilds_ = 0;
};

/// Proportional PER over a sum tree with one leaf per buffer slot. New
/// transitions enter at the current maximum priority.
class PrioritizedSampler final : public Sampler {
 public:
  PrioritizedSampler(std::size_t capacity, PerConfig cfg) : tree_(capacity), cfg_(cfg) {
    cfg_.validate();
  }
  std::string_view name() const override { return "per"; }

  double beta() const noexcept { return annealed_beta(cfg_, steps_); }
  double max_priority() const noexcept { return max_priority_; }
  const SumTree& tree() const noexcept { return tree_; }

  void on_push(std::size_t slot) override { tree_.update(slot, max_priority_); }

  SampleBatch sample(const BufferView& view, std::size_t batch, Rng& rng) override {
    if (view.empty()) throw EmptyBufferError("cannot sample from an empty buffer");
    const double total = tree_.total();
    SampleBatch out;
    out.slots.resize(batch);
    std::vector<double> probs(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      const double u = std::min(uniform01(rng) * total, std::nextafter(total, 0.0));
      out.slots[i] = tree_.find_prefix(u);
      probs[i] = tree_.leaf(out.slots[i]) / total;
    }
    PerConfig annealed = cfg_;
    annealed.beta = beta();
    out.is_weights = per_priorities_and_weights({}, annealed, view.size(), probs).is_weights;
    ++steps_;
    return out;
  }

  void update_priorities(std::span<const std::size_t> slots,
                         std::span<const double> td_errors) override {
    if (slots.size() != td_errors.size())
      throw ShapeError("priority update needs one TD error per slot");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const double p = per_priority(td_errors[i], cfg_);
      tree_.update(slots[i], p);
      max_priority_ = std::max(max_priority_, p);
    }
  }

 private:
  SumTree tree_;
  PerConfig cfg_;
  double max_priority_ = 1.0;
  std::uint64_t steps_ = 0;
};

enum class SamplerKind { uniform, swd, swd_bucketed, swa, exponential, polynomial, per };

inline std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::swd: return "swd";
    case SamplerKind::swd_bucketed: return "swd_bucketed";
    case SamplerKind::swa: return "swa";
    case SamplerKind::exponential: return "exponential";
    case SamplerKind::polynomial: return "polynomial";
    case SamplerKind::per: return "per";
  }
  return "?";
}

inline std::optional<SamplerKind> parse_sampler_kind(std::string_view s) {
  for (auto k : {SamplerKind::uniform, SamplerKind::swd, SamplerKind::swd_bucketed,
                 SamplerKind::swa, SamplerKind::exponential, SamplerKind::polynomial,
                 SamplerKind::per})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// Everything needed to construct any sampler. Defaults follow the DQN
/// table: 80k decay steps, minimum weight 0.1, 2000 buckets.
struct SamplerSpec {
  SamplerKind kind = SamplerKind::swd;
  std::uint64_t decay_steps = 80'000;
  double min_weight = 0.1;
  double tau = 1.0;
  double power = 2.0;
  std::size_t buckets = 2000;
  PerConfig per;

  DecaySchedule schedule() const {
    switch (kind) {
      case SamplerKind::swa: return DecaySchedule::swa(decay_steps, min_weight);
      case SamplerKind::exponential:
        return DecaySchedule::exponential(decay_steps, min_weight, tau);
      case SamplerKind::polynomial:
        return DecaySchedule::polynomial(decay_steps, min_weight, power);
      default: return DecaySchedule::linear(decay_steps, min_weight);
    }
  }
};

inline std::unique_ptr<Sampler> make_sampler(const SamplerSpec& spec, std::size_t capacity) {
  const std::string name(to_string(spec.kind));
  switch (spec.kind) {
    case SamplerKind::uniform: return std::make_unique<UniformSampler>();
    case SamplerKind::swd_bucketed:
      return std::make_unique<BucketedDecaySampler>(name, spec.schedule(), spec.buckets);
    case SamplerKind::per: return std::make_unique<PrioritizedSampler>(capacity, spec.per);
    default: return std::make_unique<DecaySampler>(name, spec.schedule());
  }
}

}  // namespace plastic_replay
