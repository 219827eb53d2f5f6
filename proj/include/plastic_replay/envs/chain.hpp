#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "plastic_replay/envs/tabular_mdp.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/replay_buffer.hpp"
#include "plastic_replay/rng.hpp"

namespace plastic_replay::envs {

/// Deterministic left/right chain whose terminal rewards swap sign at a
/// fixed global step.
///
/// States 0..length-1, episodes start in the middle. Action 0 moves left,
/// action 1 moves right. Entering the right end (goal) pays +1 before
/// `shift_step` and -1 from then on; entering the left end pays the
/// opposite. Both ends terminate the episode.
struct NonstationaryChain {
  std::size_t length = 7;
  std::uint64_t shift_step = 14'000;
  std::size_t max_episode_steps = 20;

  static constexpr std::size_t kActions = 2;

  std::size_t start_state() const noexcept { return length / 2; }
  bool shifted(std::uint64_t global_step) const noexcept { return global_step >= shift_step; }

  void validate() const {
    if (length < 3) throw ConfigError("chain length must be at least 3");
    if (max_episode_steps == 0) throw ConfigError("max_episode_steps must be positive");
  }
};

/// Rng is unused: the chain is deterministic given (global_step, s, a).
inline StepResult chain_step(const NonstationaryChain& env, std::uint64_t global_step,
                             std::size_t s, std::size_t a, Rng& /*rng*/) {
  if (s >= env.length || a >= NonstationaryChain::kActions)
    throw BoundsError("chain index (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                      ") out of range");
  const std::size_t next = (a == 0) ? (s == 0 ? 0 : s - 1) : std::min(env.length - 1, s + 1);
  const double sign = env.shifted(global_step) ? -1.0 : 1.0;
  if (next == env.length - 1) return {next, sign, true};
  if (next == 0) return {next, -sign, true};
  return {next, 0.0, false};
}

inline Observation one_hot(std::size_t s, std::size_t n) {
  Observation o(n, 0.0);
  o[s] = 1.0;
  return o;
}

/// Best undiscounted return from the start state within max_episode_steps,
/// by backward induction over the remaining step budget.
inline double chain_optimal_return(const NonstationaryChain& env, bool after_shift) {
  env.validate();
  const std::uint64_t t = after_shift ? env.shift_step : 0;
  Rng unused(0);
  std::vector<double> next_value(env.length, 0.0), value(env.length, 0.0);
  for (std::size_t remaining = 1; remaining <= env.max_episode_steps; ++remaining) {
    for (std::size_t s = 1; s + 1 < env.length; ++s) {
      double best = -1e300;
      for (std::size_t a = 0; a < NonstationaryChain::kActions; ++a) {
        const StepResult r = chain_step(env, t, s, a, unused);
        best = std::max(best, r.reward + (r.done ? 0.0 : next_value[r.next_state]));
      }
      value[s] = best;
    }
    next_value = value;
  }
  return next_value[env.start_state()];
}

}  // namespace plastic_replay::envs
