#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "plastic_replay/envs/tabular_mdp.hpp"
#include "plastic_replay/error.hpp"

namespace plastic_replay::theory {

using envs::TabularMdp;

/// Per-(s, a) values of one step, laid out [s][a].
using QSlice = std::vector<double>;

/// Q estimates for steps 1..H. Step H+1 is identically zero and is not
/// stored.
struct TabularQ {
  std::size_t states = 0;
  std::size_t actions = 0;
  std::size_t horizon = 0;
  std::vector<double> values;  // [h-1][s][a]

  TabularQ() = default;
  TabularQ(std::size_t S, std::size_t A, std::size_t H)
      : states(S), actions(A), horizon(H), values(S * A * H, 0.0) {}

  std::span<double> slice(std::size_t h) {
    check(h);
    return {values.data() + (h - 1) * states * actions, states * actions};
  }
  std::span<const double> slice(std::size_t h) const {
    check(h);
    return {values.data() + (h - 1) * states * actions, states * actions};
  }
  /// Values at step h, or zeros for h = H+1.
  QSlice slice_or_zero(std::size_t h) const {
    if (h == horizon + 1) return QSlice(states * actions, 0.0);
    auto s = slice(h);
    return {s.begin(), s.end()};
  }

 private:
  void check(std::size_t h) const {
    if (h < 1 || h > horizon) throw BoundsError("step " + std::to_string(h) + " outside 1..H");
  }
};

inline std::vector<double> greedy_values(std::span<const double> g, std::size_t S,
                                         std::size_t A) {
  if (g.size() != S * A) throw ShapeError("Q slice has the wrong size");
  std::vector<double> v(S);
  for (std::size_t s = 0; s < S; ++s) v[s] = *std::max_element(g.begin() + s * A, g.begin() + (s + 1) * A);
  return v;
}

/// First maximizing action (ties go to the lowest index).
inline std::size_t greedy_action(std::span<const double> g, std::size_t A, std::size_t s) {
  const auto first = g.begin() + s * A;
  return static_cast<std::size_t>(std::max_element(first, first + A) - first);
}

/// (T_h g)(s, a) = r_h(s, a) + sum_s' P_h(s'|s, a) max_a' g(s', a').
/// `g_next` is the step-(h+1) slice; pass zeros at h = H.
inline QSlice bellman_apply(const TabularMdp& mdp, std::size_t h, std::span<const double> g_next) {
  const std::size_t S = mdp.states, A = mdp.actions;
  const std::vector<double> v = greedy_values(g_next, S, A);
  QSlice out(S * A);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const auto row = mdp.row(h, s, a);
      double ev = 0.0;
      for (std::size_t s2 = 0; s2 < S; ++s2) ev += row[s2] * v[s2];
      out[s * A + a] = mdp.reward(h, s, a) + ev;
    }
  return out;
}

/// Q* by backward induction.
inline TabularQ optimal_q(const TabularMdp& mdp) {
  TabularQ q(mdp.states, mdp.actions, mdp.horizon);
  for (std::size_t h = mdp.horizon; h >= 1; --h) {
    const QSlice next = q.slice_or_zero(h + 1);
    const QSlice cur = bellman_apply(mdp, h, next);
    std::copy(cur.begin(), cur.end(), q.slice(h).begin());
  }
  return q;
}

/// Deterministic per-step policy: actions[h-1][s].
using Policy = std::vector<std::vector<std::size_t>>;

inline Policy greedy_policy(const TabularQ& q) {
  Policy pi(q.horizon, std::vector<std::size_t>(q.states));
  for (std::size_t h = 1; h <= q.horizon; ++h)
    for (std::size_t s = 0; s < q.states; ++s) pi[h - 1][s] = greedy_action(q.slice(h), q.actions, s);
  return pi;
}

/// V_1^pi for every start state, by backward induction.
inline std::vector<double> policy_values(const TabularMdp& mdp, const Policy& pi) {
  std::vector<double> v(mdp.states, 0.0), next(mdp.states, 0.0);
  for (std::size_t h = mdp.horizon; h >= 1; --h) {
    for (std::size_t s = 0; s < mdp.states; ++s) {
      const std::size_t a = pi[h - 1][s];
      const auto row = mdp.row(h, s, a);
      double ev = 0.0;
      for (std::size_t s2 = 0; s2 < mdp.states; ++s2) ev += row[s2] * next[s2];
      v[s] = mdp.reward(h, s, a) + ev;
    }
    next = v;
  }
  return next;
}

}  // namespace plastic_replay::theory
