#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "plastic_replay/error.hpp"
#include "plastic_replay/theory/bellman.hpp"

namespace plastic_replay::theory {

/// Squared Bellman residuals Delta_h(s, a) = (f_h - T_h f_{h+1})^2, laid
/// out like TabularQ, with f_{H+1} = 0.
inline TabularQ squared_bellman_residuals(const TabularMdp& mdp, const TabularQ& f) {
  if (f.states != mdp.states || f.actions != mdp.actions || f.horizon != mdp.horizon)
    throw ShapeError("Q estimates do not match the MDP");
  TabularQ delta(mdp.states, mdp.actions, mdp.horizon);
  for (std::size_t h = 1; h <= mdp.horizon; ++h) {
    const QSlice next = f.slice_or_zero(h + 1);
    const QSlice target = bellman_apply(mdp, h, next);
    const auto cur = f.slice(h);
    auto out = delta.slice(h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (cur[i] - target[i]) * (cur[i] - target[i]);
  }
  return delta;
}

/// State marginals at steps 1..H under a deterministic policy from a fixed
/// start state, by forward propagation. Result is [h-1][s].
inline std::vector<std::vector<double>> state_marginals(const TabularMdp& mdp, const Policy& pi,
                                                        std::size_t start_state) {
  if (start_state >= mdp.states) throw BoundsError("start state outside the MDP");
  std::vector<std::vector<double>> d(mdp.horizon, std::vector<double>(mdp.states, 0.0));
  d[0][start_state] = 1.0;
  for (std::size_t h = 1; h < mdp.horizon; ++h)
    for (std::size_t s = 0; s < mdp.states; ++s) {
      const double m = d[h - 1][s];
      if (m == 0.0) continue;
      const auto row = mdp.row(h, s, pi[h - 1][s]);
      for (std::size_t s2 = 0; s2 < mdp.states; ++s2) d[h][s2] += m * row[s2];
    }
  return d;
}

/// E_pi[sum_h values_h(x_h, pi_h(x_h))] from `start_state`, computed exactly.
inline double expected_sum(const TabularMdp& mdp, const Policy& pi, const TabularQ& values,
                           std::size_t start_state) {
  const auto d = state_marginals(mdp, pi, start_state);
  double total = 0.0;
  for (std::size_t h = 1; h <= mdp.horizon; ++h) {
    const auto v = values.slice(h);
    for (std::size_t s = 0; s < mdp.states; ++s)
      total += d[h - 1][s] * v[s * mdp.actions + pi[h - 1][s]];
  }
  return total;
}

struct SuboptimalityResult {
  double gap = 0.0;    // V_1^*(x) - V_1^{pi_f}(x)
  double bound = 0.0;  // sqrt(H) (sqrt(E_{pi*} sum Delta) + sqrt(E_{pi_f} sum Delta))
  double residual_optimal = 0.0;
  double residual_greedy = 0.0;
  bool holds() const noexcept { return gap <= bound; }
};

/// Suboptimality of the greedy policy of `f` against the squared Bellman
/// residual bound, everything by exact dynamic programming.
inline SuboptimalityResult suboptimality_check(const TabularMdp& mdp, const TabularQ& f,
                                               std::size_t start_state) {
  const TabularQ q_star = optimal_q(mdp);
  const Policy pi_star = greedy_policy(q_star);
  const Policy pi_f = greedy_policy(f);
  const TabularQ delta = squared_bellman_residuals(mdp, f);

  SuboptimalityResult r;
  r.gap = policy_values(mdp, pi_star)[start_state] - policy_values(mdp, pi_f)[start_state];
  r.residual_optimal = expected_sum(mdp, pi_star, delta, start_state);
  r.residual_greedy = expected_sum(mdp, pi_f, delta, start_state);
  r.bound = std::sqrt(static_cast<double>(mdp.horizon)) *
            (std::sqrt(r.residual_optimal) + std::sqrt(r.residual_greedy));
  return r;
}

}  // namespace plastic_replay::theory
