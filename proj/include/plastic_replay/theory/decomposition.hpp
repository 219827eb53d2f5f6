#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plastic_replay/error.hpp"
#include "plastic_replay/theory/bellman.hpp"
#include "plastic_replay/theory/distribution.hpp"

namespace plastic_replay::theory {

struct LossDecomposition {
  double bellman_residual = 0.0;
  double variance = 0.0;
  double total() const noexcept { return bellman_residual + variance; }
};

/// Expected squared TD loss under mu, split exactly into
///   E_mu[(f - T_h g)^2]               (Bellman residual)
///   E_mu[Var_{s'}(max_a' g(s', a'))]  (environment stochasticity, free of f)
inline LossDecomposition population_loss_decomposition(const EmpiricalDistribution& mu,
                                                       const TabularMdp& mdp, std::size_t h,
                                                       std::span<const double> f,
                                                       std::span<const double> g_next) {
  const std::size_t S = mdp.states, A = mdp.actions;
  if (mu.masses.size() != S * A || f.size() != S * A)
    throw ShapeError("distribution or Q slice does not match the MDP");
  const QSlice target = bellman_apply(mdp, h, g_next);
  const std::vector<double> v = greedy_values(g_next, S, A);
  LossDecomposition out;
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const double m = mu.masses[s * A + a];
      if (m == 0.0) continue;
      const double res = f[s * A + a] - target[s * A + a];
      const auto row = mdp.row(h, s, a);
      double mean = 0.0, second = 0.0;
      for (std::size_t s2 = 0; s2 < S; ++s2) mean += row[s2] * v[s2];
      for (std::size_t s2 = 0; s2 < S; ++s2) second += row[s2] * (v[s2] - mean) * (v[s2] - mean);
      out.bellman_residual += m * res * res;
      out.variance += m * second;
    }
  return out;
}

/// Lookup-table function class over a partition of the state-action atoms:
/// f(s, a) = theta[cell(s, a)], so df/dtheta is an indicator. The identity
/// partition is the plain table; coarser partitions cannot interpolate every
/// atom, which keeps fitted residuals alive after an atom is revisited.
struct CellMap {
  std::size_t cells = 0;
  std::vector<std::size_t> cell_of;  // [s][a]

  static CellMap identity(std::size_t S, std::size_t A) {
    CellMap m{S * A, std::vector<std::size_t>(S * A)};
    for (std::size_t i = 0; i < S * A; ++i) m.cell_of[i] = i;
    return m;
  }
  /// One cell per action, shared by all states.
  static CellMap by_action(std::size_t S, std::size_t A) {
    CellMap m{A, std::vector<std::size_t>(S * A)};
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) m.cell_of[s * A + a] = a;
    return m;
  }

  QSlice expand(std::span<const double> theta) const {
    if (theta.size() != cells) throw ShapeError("parameter vector does not match the cells");
    QSlice f(cell_of.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = theta[cell_of[i]];
    return f;
  }
};

/// d/dtheta of sum_x weights(x) (f(x) - target(x))^2, per cell.
inline std::vector<double> weighted_loss_gradient(std::span<const double> weights,
                                                  std::span<const double> f,
                                                  std::span<const double> target,
                                                  const CellMap& cells) {
  if (weights.size() != cells.cell_of.size() || f.size() != weights.size() ||
      target.size() != weights.size())
    throw ShapeError("gradient inputs do not match the cell map");
  std::vector<double> g(cells.cells, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i] != 0.0) g[cells.cell_of[i]] += 2.0 * weights[i] * (f[i] - target[i]);
  return g;
}

inline double weighted_loss(std::span<const double> weights, std::span<const double> f,
                            std::span<const double> target) {
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double r = f[i] - target[i];
    s += weights[i] * r * r;
  }
  return s;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Initial gradient of round k split into its two sources:
///   lhs          = grad E_{mu_k}[(f - T_h f_next_cur)^2] at f_prev
///   dist_shift   = (1/k) grad E_{d_k}[(f - T_h f_next_prev)^2] at f_prev
///   target_drift = E_{mu_k}[2 df (T_h f_next_prev - T_h f_next_cur)]
/// All three are per-cell vectors.
struct GradientDecomposition {
  std::vector<double> lhs;
  std::vector<double> dist_shift;
  std::vector<double> target_drift;

  /// max |lhs - (dist_shift + target_drift)|
  double identity_residual() const {
    double r = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i)
      r = std::max(r, std::abs(lhs[i] - (dist_shift[i] + target_drift[i])));
    return r;
  }
};

/// Largest allowed |grad| of the previous round's loss at f_prev.
inline constexpr double kMinimizerTolerance = 1e-9;

namespace detail {

inline GradientDecomposition decompose_initial_gradient(
    const EmpiricalDistribution& mu_k, Atom visit, const TabularMdp& mdp, std::size_t h,
    std::span<const double> f_prev, std::span<const double> f_next_prev,
    std::span<const double> f_next_cur, std::uint64_t k, const CellMap& cells,
    double shift_coefficient) {
  const std::size_t S = mdp.states, A = mdp.actions, n = S * A;
  if (k == 0) throw PreconditionError("round index k must be at least 1");
  if (mu_k.masses.size() != n || f_prev.size() != n || cells.cell_of.size() != n)
    throw ShapeError("decomposition inputs do not match the MDP");

  // The step after the horizon is identically zero, whatever was passed in.
  const QSlice zeros(n, 0.0);
  const bool last = (h == mdp.horizon);
  const QSlice target_prev = bellman_apply(mdp, h, last ? std::span<const double>(zeros) : f_next_prev);
  const QSlice target_cur = bellman_apply(mdp, h, last ? std::span<const double>(zeros) : f_next_cur);

  std::vector<double> visit_mass(n, 0.0);
  visit_mass[mu_k.index(visit)] = 1.0;

  if (k >= 2) {
    // mu_{k-1} recovered from the recursion; f_prev must minimize under it.
    const double kd = static_cast<double>(k);
    std::vector<double> mu_prev(n);
    for (std::size_t i = 0; i < n; ++i) mu_prev[i] = (kd * mu_k.masses[i] - visit_mass[i]) / (kd - 1.0);
    const auto g = weighted_loss_gradient(mu_prev, f_prev, target_prev, cells);
    for (double x : g)
      if (std::abs(x) > kMinimizerTolerance)
        throw PreconditionError("f_prev is not a minimizer of the previous round's loss (|grad| = " +
                                std::to_string(std::abs(x)) + ")");
  }

  GradientDecomposition out;
  out.lhs = weighted_loss_gradient(mu_k.masses, f_prev, target_cur, cells);
  out.dist_shift = weighted_loss_gradient(visit_mass, f_prev, target_prev, cells);
  for (double& x : out.dist_shift) x *= shift_coefficient;
  out.target_drift.assign(cells.cells, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    out.target_drift[cells.cell_of[i]] += 2.0 * mu_k.masses[i] * (target_prev[i] - target_cur[i]);
  return out;
}

}  // namespace detail

/// `visit` is the atom of the single-sample d_k. f_next_* are ignored at
/// h = H, where the next step is identically zero.
inline GradientDecomposition initial_gradient_decomposition(
    const EmpiricalDistribution& mu_k, Atom visit, const TabularMdp& mdp, std::size_t h,
    std::span<const double> f_prev, std::span<const double> f_next_prev,
    std::span<const double> f_next_cur, std::uint64_t k, const CellMap& cells) {
  return detail::decompose_initial_gradient(mu_k, visit, mdp, h, f_prev, f_next_prev, f_next_cur,
                                            k, cells, 1.0 / static_cast<double>(k));
}

inline GradientDecomposition initial_gradient_decomposition(
    const EmpiricalDistribution& mu_k, Atom visit, const TabularMdp& mdp, std::size_t h,
    std::span<const double> f_prev, std::span<const double> f_next_prev,
    std::span<const double> f_next_cur, std::uint64_t k) {
  return initial_gradient_decomposition(mu_k, visit, mdp, h, f_prev, f_next_prev, f_next_cur, k,
                                        CellMap::identity(mdp.states, mdp.actions));
}

}  // namespace plastic_replay::theory
