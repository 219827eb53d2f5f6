#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "plastic_replay/envs/chain.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/grama.hpp"
#include "plastic_replay/nn.hpp"
#include "plastic_replay/replay_buffer.hpp"
#include "plastic_replay/rng.hpp"
#include "plastic_replay/samplers.hpp"
#include "plastic_replay/sampling.hpp"

namespace plastic_replay {

/// Linear epsilon decay from `start` to `end` over the first `fraction` of
/// the run, constant afterwards.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double fraction = 0.1;

  double at(std::uint64_t step, std::uint64_t total_steps) const {
    const double span = fraction * static_cast<double>(total_steps);
    if (span <= 0.0) return end;
    const double x = std::min(1.0, static_cast<double>(step) / span);
    return start + x * (end - start);
  }
};

/// Sampler spec whose decay horizon is left to resolve_sampler.
inline SamplerSpec run_relative_sampler(SamplerKind kind = SamplerKind::swd) {
  SamplerSpec s;
  s.kind = kind;
  s.decay_steps = 0;
  return s;
}

struct AgentConfig {
  double gamma = 0.99;
  std::size_t batch_size = 32;
  std::uint64_t learning_starts = 1000;
  std::uint64_t train_frequency = 4;
  std::uint64_t target_update_interval = 500;
  std::uint64_t utd = 1;
  EpsilonSchedule epsilon;
  /// decay_steps = 0 means 80% of the run.
  SamplerSpec sampler = run_relative_sampler();
  std::uint64_t seed = 0;

  std::size_t buffer_capacity = 100'000;
  std::vector<std::size_t> hidden{64, 64};
  double learning_rate = 1e-3;
  std::uint64_t log_interval = 500;
  std::size_t grama_batch = 512;
  double grama_tau = kDefaultGramaTau;

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (utd < 1) throw ConfigError("utd must be >= 1");
    if (train_frequency < 1) throw ConfigError("train_frequency must be >= 1");
    if (target_update_interval < 1) throw ConfigError("target_update_interval must be >= 1");
    if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
    if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (grama_batch < 1) throw ConfigError("grama_batch must be >= 1");
    if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 &&
          epsilon.end <= 1.0 && epsilon.fraction >= 0.0))
      throw ConfigError("epsilon schedule out of range");
  }
};

struct MetricsRow {
  std::uint64_t global_step = 0;
  /// Mean return of the episodes finished since the previous row, or the
  /// latest finished episode's return if none finished in between.
  double episode_return = 0.0;
  double grad_l1 = 0.0;
  double grama_inactive_frac = 0.0;
  std::string sampler;
  std::uint64_t seed = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct EpisodeRecord {
  std::uint64_t start_step = 0;
  std::uint64_t end_step = 0;
  double episode_return = 0.0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  std::vector<EpisodeRecord> episodes;
  std::uint64_t gradient_updates = 0;
};

/// Mean return of episodes that started at or after `from_step`; NaN when
/// there are none.
inline double mean_return_since(const std::vector<EpisodeRecord>& episodes,
                                std::uint64_t from_step) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : episodes)
    if (e.start_step >= from_step) {
      sum += e.episode_return;
      ++n;
    }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

/// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)), or r when done.
inline std::vector<double> double_dqn_targets(std::span<const Transition* const> batch,
                                              const nn::Mlp& online, const nn::Mlp& target,
                                              double gamma) {
  if (batch.empty()) throw ShapeError("double_dqn_targets needs a non-empty batch");
  if (online.output_dim() != target.output_dim() || online.input_dim() != target.input_dim())
    throw ShapeError("online and target networks differ in shape");
  std::vector<double> y(batch.size());
  nn::ForwardCache c_on, c_tg;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i];
    if (tr.done) {
      y[i] = tr.reward;
      continue;
    }
    const auto& q_on = nn::forward(online, tr.next_state, c_on);
    const std::size_t a = static_cast<std::size_t>(
        std::max_element(q_on.begin(), q_on.end()) - q_on.begin());
    const auto& q_tg = nn::forward(target, tr.next_state, c_tg);
    y[i] = tr.reward + gamma * q_tg[a];
  }
  return y;
}

struct TrainStepResult {
  double loss = 0.0;
  nn::GradientRecord record;
  std::vector<double> td_errors;
};

/// Online and target Q-networks with their optimizer.
class DqnLearner {
 public:
  DqnLearner(std::size_t obs_dim, std::size_t actions, const AgentConfig& cfg, Rng& init_rng)
      : gamma_(cfg.gamma) {
    std::vector<std::size_t> sizes{obs_dim};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(actions);
    online_ = nn::Mlp(sizes);
    online_.init_uniform(init_rng);
    target_ = online_;
    adam_ = nn::AdamState::for_parameters(online_.parameter_count(), cfg.learning_rate);
  }

  const nn::Mlp& online() const noexcept { return online_; }
  const nn::Mlp& target() const noexcept { return target_; }
  nn::Mlp& online() noexcept { return online_; }
  void sync_target() { target_ = online_; }

  /// Gradient of the (optionally weighted) squared TD loss, summed over the
  /// batch; the loss is the weighted mean.
  TrainStepResult gradients(std::span<const Transition* const> batch,
                            std::span<const double> is_weights) const {
    if (!is_weights.empty() && is_weights.size() != batch.size())
      throw ShapeError("one importance weight per transition required");
    const std::vector<double> y = double_dqn_targets(batch, online_, target_, gamma_);
    TrainStepResult out;
    out.record = nn::GradientRecord::zeros_like(online_);
    out.td_errors.resize(batch.size());
    std::vector<double> loss_grad(online_.output_dim()), d1, d2;
    nn::ForwardCache cache;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Transition& tr = *batch[i];
      const auto& q = nn::forward(online_, tr.state, cache);
      const auto a = static_cast<std::size_t>(tr.action);
      if (a >= q.size()) throw ShapeError("action index outside the network output");
      const double w = is_weights.empty() ? 1.0 : is_weights[i];
      const double delta = q[a] - y[i];
      out.td_errors[i] = delta;
      out.loss += w * delta * delta;
      std::fill(loss_grad.begin(), loss_grad.end(), 0.0);
      loss_grad[a] = 2.0 * w * delta;
      nn::backward_accumulate(online_, cache, loss_grad, out.record, d1, d2);
    }
    out.loss /= static_cast<double>(batch.size());
    return out;
  }

  /// One Adam step on the batch-mean loss.
  TrainStepResult train_step(std::span<const Transition* const> batch,
                             std::span<const double> is_weights = {}) {
    TrainStepResult r = gradients(batch, is_weights);
    if (!std::isfinite(r.loss)) throw NumericError("non-finite TD loss " + std::to_string(r.loss));
    std::vector<double> g(r.record.param_grads);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& x : g) x *= inv;
    nn::adam_step(online_.params(), g, adam_);
    return r;
  }

 private:
  double gamma_;
  nn::Mlp online_;
  nn::Mlp target_;
  nn::AdamState adam_;
};

/// Decay samplers default to T = 80% of the run when no explicit decay
/// horizon was configured.
inline SamplerSpec resolve_sampler(SamplerSpec spec, std::uint64_t total_steps) {
  if (spec.decay_steps == 0)
    spec.decay_steps = std::max<std::uint64_t>(1, total_steps * 4 / 5);
  return spec;
}

/// Double DQN on the nonstationary chain. Deterministic per cfg.seed.
///
/// Every step: act epsilon-greedily, push the transition stamped with the
/// current global step, then (after learning_starts, every train_frequency
/// steps) run `utd` gradient updates. Episode timeouts are stored as
/// non-terminal. A row is logged every log_interval steps.
inline RunResult run(const AgentConfig& cfg, const envs::NonstationaryChain& env,
                     std::uint64_t total_steps) {
  cfg.validate();
  env.validate();
  const std::size_t obs_dim = env.length, actions = envs::NonstationaryChain::kActions;
  const SamplerSpec spec = resolve_sampler(cfg.sampler, total_steps);
  const std::string sampler_name(to_string(spec.kind));

  Rng init_rng = make_rng(cfg.seed, "init");
  Rng act_rng = make_rng(cfg.seed, "act");
  Rng sample_rng = make_rng(cfg.seed, "sample");
  Rng env_rng = make_rng(cfg.seed, "env");
  Rng grama_rng = make_rng(cfg.seed, "grama");

  DqnLearner learner(obs_dim, actions, cfg, init_rng);
  ReplayBuffer<Transition> buffer(cfg.buffer_capacity);
  auto sampler = make_sampler(spec, cfg.buffer_capacity);

  RunResult result;
  std::size_t s = env.start_state();
  std::size_t episode_len = 0;
  std::uint64_t episode_start = 0;
  double episode_return = 0.0;
  double last_return = 0.0;
  double window_sum = 0.0;
  std::size_t window_count = 0;
  double last_grad_l1 = 0.0;
  std::vector<const Transition*> batch;
  nn::ForwardCache cache;

  for (std::uint64_t t = 0; t < total_steps; ++t) {
    const double eps = cfg.epsilon.at(t, total_steps);
    std::size_t a;
    if (uniform01(act_rng) < eps) {
      a = std::min(actions - 1, static_cast<std::size_t>(uniform01(act_rng) * static_cast<double>(actions)));
    } else {
      const auto& q = nn::forward(learner.online(), envs::one_hot(s, obs_dim), cache);
      a = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
    }
    const envs::StepResult r = envs::chain_step(env, t, s, a, env_rng);
    episode_return += r.reward;
    ++episode_len;

    Transition tr;
    tr.state = envs::one_hot(s, obs_dim);
    tr.action = static_cast<std::int64_t>(a);
    tr.reward = r.reward;
    tr.next_state = envs::one_hot(r.next_state, obs_dim);
    tr.done = r.done;
    tr.timestamp = t;
    sampler->on_push(buffer.push(std::move(tr)));

    const bool truncated = !r.done && episode_len >= env.max_episode_steps;
    if (r.done || truncated) {
      result.episodes.push_back({episode_start, t, episode_return});
      last_return = episode_return;
      window_sum += episode_return;
      ++window_count;
      s = env.start_state();
      episode_len = 0;
      episode_return = 0.0;
      episode_start = t + 1;
    } else {
      s = r.next_state;
    }

    if (t + 1 > cfg.learning_starts && (t + 1) % cfg.train_frequency == 0) {
      for (std::uint64_t u = 0; u < cfg.utd; ++u) {
        const SampleBatch sb = sampler->sample(buffer.view(), cfg.batch_size, sample_rng);
        batch.clear();
        for (std::size_t slot : sb.slots) batch.push_back(&buffer.get(slot));
        const TrainStepResult step = learner.train_step(batch, sb.is_weights);
        sampler->update_priorities(sb.slots, step.td_errors);
        last_grad_l1 = grad_l1(step.record);
        ++result.gradient_updates;
      }
    }
    if ((t + 1) % cfg.target_update_interval == 0) learner.sync_target();

    if ((t + 1) % cfg.log_interval == 0) {
      MetricsRow row;
      row.global_step = t + 1;
      row.episode_return = window_count > 0 ? window_sum / static_cast<double>(window_count) : last_return;
      row.grad_l1 = last_grad_l1;
      // GraMa on a uniform evaluation batch, independent of the sampler under test.
      const auto eval_slots = sample_batch_uniform(buffer.view(), cfg.grama_batch, grama_rng);
      batch.clear();
      for (std::size_t slot : eval_slots) batch.push_back(&buffer.get(slot));
      row.grama_inactive_frac = grama_report(learner.gradients(batch, {}).record, cfg.grama_tau).inactive_fraction;
      row.sampler = sampler_name;
      row.seed = cfg.seed;
      result.rows.push_back(std::move(row));
      window_sum = 0.0;
      window_count = 0;
    }
  }
  return result;
}

}  // namespace plastic_replay
