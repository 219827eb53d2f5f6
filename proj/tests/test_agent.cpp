#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "plastic_replay/agent.hpp"

using namespace plastic_replay;

namespace {

Transition make_transition(Observation s, std::int64_t a, double r, Observation s2, bool done) {
  Transition t;
  t.state = std::move(s);
  t.action = a;
  t.reward = r;
  t.next_state = std::move(s2);
  t.done = done;
  return t;
}

AgentConfig small_config(std::uint64_t seed) {
  AgentConfig c;
  c.seed = seed;
  c.hidden = {8};
  c.learning_starts = 100;
  c.log_interval = 100;
  c.target_update_interval = 50;
  c.buffer_capacity = 1000;
  c.grama_batch = 32;
  return c;
}

envs::NonstationaryChain small_chain() {
  envs::NonstationaryChain env;
  env.length = 5;
  env.shift_step = 300;
  return env;
}

}  // namespace

TEST(EpsilonSchedule, LinearThenConstant) {
  const EpsilonSchedule e{1.0, 0.1, 0.5};
  EXPECT_EQ(e.at(0, 100), 1.0);
  EXPECT_NEAR(e.at(25, 100), 0.55, 1e-15);
  EXPECT_NEAR(e.at(50, 100), 0.1, 1e-15);
  EXPECT_NEAR(e.at(99, 100), 0.1, 1e-15);
  EXPECT_EQ((EpsilonSchedule{1.0, 0.2, 0.0}).at(0, 100), 0.2);
}

TEST(AgentConfig, Validation) {
  AgentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AgentConfig{};
  c.utd = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AgentConfig{};
  c.epsilon.end = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AgentConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ResolveSampler, DefaultsToFourFifthsOfRun) {
  EXPECT_EQ(resolve_sampler(run_relative_sampler(), 20'000).decay_steps, 16'000u);
  EXPECT_EQ(resolve_sampler(run_relative_sampler(), 1).decay_steps, 1u);
  SamplerSpec s;
  s.decay_steps = 123;
  EXPECT_EQ(resolve_sampler(s, 20'000).decay_steps, 123u);
}

TEST(MeanReturnSince, FiltersByStart) {
  const std::vector<EpisodeRecord> e{{0, 4, 1.0}, {5, 9, -1.0}, {10, 12, 3.0}};
  EXPECT_DOUBLE_EQ(mean_return_since(e, 5), 1.0);
  EXPECT_DOUBLE_EQ(mean_return_since(e, 0), 1.0);
  EXPECT_DOUBLE_EQ(mean_return_since(e, 10), 3.0);
  EXPECT_TRUE(std::isnan(mean_return_since(e, 11)));
}

TEST(DoubleDqnTargets, OnlineSelectsTargetEvaluates) {
  nn::Mlp online({2, 2}), target({2, 2});
  online.bias(0, 0) = 1.0;
  online.bias(0, 1) = 3.0;
  target.bias(0, 0) = 5.0;
  target.bias(0, 1) = -2.0;
  const auto live = make_transition({1, 0}, 0, 0.5, {0, 1}, false);
  const auto term = make_transition({1, 0}, 0, 0.5, {0, 1}, true);
  const Transition* batch[] = {&live, &term};
  const auto y = double_dqn_targets(batch, online, target, 0.9);
  EXPECT_DOUBLE_EQ(y[0], 0.5 + 0.9 * -2.0);
  EXPECT_EQ(y[1], 0.5);
}

TEST(DoubleDqnTargets, Errors) {
  nn::Mlp a({2, 2}), b({2, 3});
  const auto t = make_transition({1, 0}, 0, 0.0, {0, 1}, false);
  const Transition* batch[] = {&t};
  EXPECT_THROW(double_dqn_targets(batch, a, b, 0.9), ShapeError);
  EXPECT_THROW(double_dqn_targets({}, a, a, 0.9), ShapeError);
}

TEST(DqnLearner, SingleTransitionHandLoss) {
  AgentConfig c;
  c.hidden = {};
  Rng rng(1);
  DqnLearner l(3, 2, c, rng);
  auto& net = l.online();
  std::fill(net.params().begin(), net.params().end(), 0.0);
  net.weight(0, 1, 0) = 0.5;
  net.weight(0, 1, 2) = -1.0;
  net.bias(0, 1) = 0.25;
  const auto t = make_transition({2.0, 7.0, 1.0}, 1, 1.0, {0, 0, 0}, true);
  const Transition* batch[] = {&t};
  const auto r = l.gradients(batch, {});
  const double q = 0.5 * 2.0 - 1.0 * 1.0 + 0.25, delta = q - 1.0;
  EXPECT_DOUBLE_EQ(r.loss, delta * delta);
  EXPECT_DOUBLE_EQ(r.td_errors[0], delta);
  const auto& L = net.layers()[0];
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.record.param_grads[L.weight_offset + i], 0.0);  // action 0 row untouched
    EXPECT_DOUBLE_EQ(r.record.param_grads[L.weight_offset + 3 + i], 2.0 * delta * t.state[i]);
  }
  EXPECT_DOUBLE_EQ(r.record.param_grads[L.bias_offset + 1], 2.0 * delta);
}

TEST(DqnLearner, UnitImportanceWeightsChangeNothing) {
  AgentConfig c;
  c.hidden = {6};
  Rng rng(2);
  DqnLearner l(4, 2, c, rng);
  const auto a = make_transition({1, 0, 0, 0}, 0, 1.0, {0, 1, 0, 0}, false);
  const auto b = make_transition({0, 0, 1, 0}, 1, -1.0, {0, 0, 0, 1}, true);
  const Transition* batch[] = {&a, &b};
  const std::vector<double> ones{1.0, 1.0}, half{0.5, 0.5};
  const auto r0 = l.gradients(batch, {}), r1 = l.gradients(batch, ones), r2 = l.gradients(batch, half);
  EXPECT_EQ(r0.record.param_grads, r1.record.param_grads);
  EXPECT_EQ(r0.loss, r1.loss);
  for (std::size_t i = 0; i < r0.record.param_grads.size(); ++i)
    EXPECT_DOUBLE_EQ(r2.record.param_grads[i], 0.5 * r0.record.param_grads[i]);
  EXPECT_THROW(l.gradients(batch, std::vector<double>{1.0}), ShapeError);
}

TEST(DqnLearner, FixedPointDoesNotMove) {
  AgentConfig c;
  c.hidden = {};
  Rng rng(3);
  DqnLearner l(2, 2, c, rng);
  std::fill(l.online().params().begin(), l.online().params().end(), 0.0);
  l.online().bias(0, 0) = 0.7;
  l.sync_target();
  const auto t = make_transition({1, 0}, 0, 0.7, {0, 1}, true);
  const Transition* batch[] = {&t};
  const auto before = l.online().params();
  const std::vector<double> keep(before.begin(), before.end());
  const auto r = l.train_step(batch);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_TRUE(std::equal(keep.begin(), keep.end(), l.online().params().begin()));
}

TEST(DqnLearner, TargetOnlyMovesOnSync) {
  AgentConfig c;
  c.hidden = {4};
  Rng rng(4);
  DqnLearner l(2, 2, c, rng);
  const std::vector<double> target0(l.target().params().begin(), l.target().params().end());
  const auto t = make_transition({1, 0}, 1, 1.0, {0, 1}, false);
  const Transition* batch[] = {&t};
  for (int i = 0; i < 5; ++i) l.train_step(batch);
  EXPECT_TRUE(std::equal(target0.begin(), target0.end(), l.target().params().begin()));
  l.sync_target();
  EXPECT_TRUE(std::equal(l.online().params().begin(), l.online().params().end(), l.target().params().begin()));
}

TEST(DqnLearner, NonFiniteLossThrows) {
  AgentConfig c;
  c.hidden = {};
  Rng rng(5);
  DqnLearner l(2, 2, c, rng);
  const auto t = make_transition({1, 0}, 0, std::numeric_limits<double>::infinity(), {0, 1}, true);
  const Transition* batch[] = {&t};
  EXPECT_THROW(l.train_step(batch), NumericError);
}

TEST(Run, DeterministicPerSeed) {
  const auto env = small_chain();
  const auto a = run(small_config(7), env, 600), b = run(small_config(7), env, 600);
  EXPECT_EQ(a.rows, b.rows);
  ASSERT_EQ(a.rows.size(), 6u);
  const auto c = run(small_config(8), env, 600);
  EXPECT_NE(a.rows, c.rows);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].global_step, 100 * (i + 1));
    EXPECT_EQ(a.rows[i].sampler, "swd");
    EXPECT_EQ(a.rows[i].seed, 7u);
    EXPECT_GE(a.rows[i].grama_inactive_frac, 0.0);
    EXPECT_LE(a.rows[i].grama_inactive_frac, 1.0);
  }
}

TEST(Run, WarmupGatesTraining) {
  auto c = small_config(1);
  c.learning_starts = 1000;
  const auto r = run(c, small_chain(), 500);
  EXPECT_EQ(r.gradient_updates, 0u);
  for (const auto& row : r.rows) EXPECT_EQ(row.grad_l1, 0.0);
}

TEST(Run, UpdateToDataAccounting) {
  for (std::uint64_t utd : {1u, 3u})
    for (std::uint64_t freq : {1u, 4u, 7u}) {
      auto c = small_config(2);
      c.utd = utd;
      c.train_frequency = freq;
      c.log_interval = 1000;
      const std::uint64_t total = 400;
      const auto r = run(c, small_chain(), total);
      EXPECT_EQ(r.gradient_updates, utd * (total / freq - c.learning_starts / freq));
    }
}

TEST(Run, FlatDecayWeightsReproduceUniform) {
  auto u = small_config(3);
  u.sampler = run_relative_sampler(SamplerKind::uniform);
  auto s = small_config(3);
  s.sampler = run_relative_sampler(SamplerKind::swd);
  s.sampler.min_weight = 1.0;
  const auto env = small_chain();
  auto a = run(u, env, 600), b = run(s, env, 600);
  for (auto& row : b.rows) row.sampler = "uniform";
  EXPECT_EQ(a.rows, b.rows);
}

TEST(Run, EpisodesCoverEverySteps) {
  const auto r = run(small_config(4), small_chain(), 500);
  std::uint64_t expected_start = 0;
  for (const auto& e : r.episodes) {
    EXPECT_EQ(e.start_step, expected_start);
    EXPECT_GE(e.end_step, e.start_step);
    EXPECT_LE(e.end_step - e.start_step + 1, small_chain().max_episode_steps);
    expected_start = e.end_step + 1;
  }
}
