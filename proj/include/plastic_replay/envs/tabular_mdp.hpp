#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "plastic_replay/error.hpp"
#include "plastic_replay/rng.hpp"

namespace plastic_replay::envs {

/// Finite episodic MDP with per-step dynamics. Steps are numbered 1..H.
struct TabularMdp {
  std::size_t states = 0;
  std::size_t actions = 0;
  std::size_t horizon = 0;
  std::vector<double> transitions;  // [h-1][s][a][s']
  std::vector<double> rewards;      // [h-1][s][a], in [0, 1]
  std::vector<double> initial;      // [s]

  std::size_t atoms() const noexcept { return states * actions; }

  std::span<const double> row(std::size_t h, std::size_t s, std::size_t a) const {
    check(h, s, a);
    return {transitions.data() + (((h - 1) * states + s) * actions + a) * states, states};
  }
  std::span<double> row(std::size_t h, std::size_t s, std::size_t a) {
    check(h, s, a);
    return {transitions.data() + (((h - 1) * states + s) * actions + a) * states, states};
  }
  double reward(std::size_t h, std::size_t s, std::size_t a) const {
    check(h, s, a);
    return rewards[((h - 1) * states + s) * actions + a];
  }
  double& reward(std::size_t h, std::size_t s, std::size_t a) {
    check(h, s, a);
    return rewards[((h - 1) * states + s) * actions + a];
  }

  static TabularMdp zeros(std::size_t S, std::size_t A, std::size_t H) {
    if (S == 0 || A == 0 || H == 0) throw ConfigError("MDP sizes must be positive");
    TabularMdp m;
    m.states = S;
    m.actions = A;
    m.horizon = H;
    m.transitions.assign(H * S * A * S, 0.0);
    m.rewards.assign(H * S * A, 0.0);
    m.initial.assign(S, 1.0 / static_cast<double>(S));
    return m;
  }

  void check(std::size_t h, std::size_t s, std::size_t a) const {
    if (h < 1 || h > horizon || s >= states || a >= actions)
      throw BoundsError("index (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                        ", a=" + std::to_string(a) + ") outside the MDP");
  }
};

/// Dirichlet(1) transition rows and Uniform[0,1] rewards, start state
/// uniform. Deterministic per seed.
inline TabularMdp random_mdp(std::uint64_t seed, std::size_t S, std::size_t A, std::size_t H) {
  TabularMdp m = TabularMdp::zeros(S, A, H);
  Rng rng(seed);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t h = 1; h <= H; ++h)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        auto r = m.row(h, s, a);
        double total = 0.0;
        for (double& p : r) total += (p = gamma(rng));
        for (double& p : r) p /= total;
        m.reward(h, s, a) = unit(rng);
      }
  return m;
}

struct StepResult {
  std::size_t next_state = 0;
  double reward = 0.0;
  bool done = false;
};

/// Index drawn from a probability row with one uniform01.
inline std::size_t sample_row(std::span<const double> row, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] <= 0.0) continue;
    acc += row[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

inline StepResult step(const TabularMdp& mdp, std::size_t h, std::size_t s, std::size_t a,
                       Rng& rng) {
  const auto r = mdp.row(h, s, a);
  return {sample_row(r, rng), mdp.reward(h, s, a), h == mdp.horizon};
}

}  // namespace plastic_replay::envs
