#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "plastic_replay/decay.hpp"
#include "plastic_replay/envs/tabular_mdp.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/rng.hpp"
#include "plastic_replay/theory/bellman.hpp"
#include "plastic_replay/theory/decomposition.hpp"
#include "plastic_replay/theory/distribution.hpp"

namespace plastic_replay::theory {

struct FqiConfig {
  std::uint64_t episodes = 1024;
  double epsilon = 0.2;
  /// Parameterization of every step; defaults to one cell per action.
  std::optional<CellMap> cells;
  /// Age weighting (age in episodes) for the counterfactual learner.
  std::optional<DecaySchedule> weighting;
  std::uint64_t seed = 0;
};

/// Measurements taken at the start of round k, before refitting, at h = H.
struct FqiRound {
  std::uint64_t k = 0;
  /// ||grad E_{mu_k}[(f - T_H 0)^2]|| at the previous fit.
  double grad_norm = 0.0;
  double dist_shift_norm = 0.0;
  double target_drift_norm = 0.0;
  /// E_{mu_k}[Var(max g)] at h = H; zero since the next step is zero.
  double variance = 0.0;
  /// Same gradient for the age-weighted learner under its own measure; NaN
  /// when no weighting is configured.
  double weighted_grad_norm = std::numeric_limits<double>::quiet_NaN();
};

/// Weighted cell means: theta[c] = sum mu y / sum mu over the atoms of c.
/// Cells without mass keep their previous value.
inline void fit_cells(std::span<const double> weights, std::span<const double> target,
                      const CellMap& cells, std::vector<double>& theta) {
  std::vector<double> num(cells.cells, 0.0), den(cells.cells, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    num[cells.cell_of[i]] += weights[i] * target[i];
    den[cells.cell_of[i]] += weights[i];
  }
  for (std::size_t c = 0; c < cells.cells; ++c)
    if (den[c] > 0.0) theta[c] = num[c] / den[c];
}

namespace detail {

struct FqiLearner {
  std::vector<std::vector<double>> theta;  // [h-1][cell]

  FqiLearner(std::size_t H, std::size_t cells) : theta(H, std::vector<double>(cells, 0.0)) {}

  /// Backward refit of every step against the measures in `masses`.
  void refit(const TabularMdp& mdp, const CellMap& cells,
             const std::vector<std::vector<double>>& masses) {
    QSlice next(mdp.atoms(), 0.0);
    for (std::size_t h = mdp.horizon; h >= 1; --h) {
      const QSlice target = bellman_apply(mdp, h, next);
      fit_cells(masses[h - 1], target, cells, theta[h - 1]);
      next = cells.expand(theta[h - 1]);
    }
  }
};

/// Normalized age-weighted measure over the visits of one step.
inline std::vector<double> weighted_measure(std::span<const std::size_t> visits, std::size_t atoms,
                                            const DecaySchedule& schedule) {
  std::vector<double> m(atoms, 0.0);
  double total = 0.0;
  const std::uint64_t newest = visits.size() - 1;
  for (std::size_t e = 0; e < visits.size(); ++e) {
    const double w = decay_weight(schedule, newest - e);
    m[visits[e]] += w;
    total += w;
  }
  for (double& x : m) x /= total;
  return m;
}

}  // namespace detail

/// Tabular FQI with one sampled episode per round. The behavior policy is
/// epsilon-greedy with respect to the uniform-replay learner; a second
/// learner fitted on the same data under `weighting` gives the
/// counterfactual gradient trace. Returns one entry per round k = 1..K.
inline std::vector<FqiRound> fqi_run(const TabularMdp& mdp, const FqiConfig& cfg) {
  if (cfg.episodes < 2) throw ConfigError("fqi_run needs at least 2 episodes");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (cfg.weighting) cfg.weighting->validate();
  const std::size_t S = mdp.states, A = mdp.actions, H = mdp.horizon, n = mdp.atoms();
  const CellMap cells = cfg.cells ? *cfg.cells : CellMap::by_action(S, A);
  if (cells.cell_of.size() != n) throw ShapeError("cell map does not match the MDP");

  Rng rng(cfg.seed);
  std::vector<EmpiricalDistribution> mu(H, EmpiricalDistribution(S, A));
  std::vector<std::vector<std::size_t>> visits(H);
  detail::FqiLearner uniform(H, cells.cells), weighted(H, cells.cells);
  std::vector<std::vector<double>> nu(H);
  const QSlice zeros(n, 0.0);

  std::vector<FqiRound> trace;
  trace.reserve(cfg.episodes);
  for (std::uint64_t k = 1; k <= cfg.episodes; ++k) {
    Atom last{};
    std::size_t s = envs::sample_row(mdp.initial, rng);
    for (std::size_t h = 1; h <= H; ++h) {
      const QSlice q = cells.expand(uniform.theta[h - 1]);
      std::size_t a = greedy_action(q, A, s);
      if (uniform01(rng) < cfg.epsilon) a = std::uniform_int_distribution<std::size_t>(0, A - 1)(rng);
      last = {s, a};
      mu[h - 1] = dist_update(std::move(mu[h - 1]), last);
      visits[h - 1].push_back(s * A + a);
      s = envs::step(mdp, h, s, a, rng).next_state;
    }

    FqiRound r;
    r.k = k;
    const QSlice f_prev = cells.expand(uniform.theta[H - 1]);
    const auto dec = initial_gradient_decomposition(mu[H - 1], last, mdp, H, f_prev, zeros, zeros, k, cells);
    r.grad_norm = l2_norm(dec.lhs);
    r.dist_shift_norm = l2_norm(dec.dist_shift);
    r.target_drift_norm = l2_norm(dec.target_drift);
    r.variance = population_loss_decomposition(mu[H - 1], mdp, H, f_prev, zeros).variance;

    std::vector<std::vector<double>> masses(H);
    for (std::size_t h = 0; h < H; ++h) masses[h] = mu[h].masses;
    uniform.refit(mdp, cells, masses);

    if (cfg.weighting) {
      for (std::size_t h = 0; h < H; ++h) nu[h] = detail::weighted_measure(visits[h], n, *cfg.weighting);
      const QSlice target = bellman_apply(mdp, H, zeros);
      const QSlice g_prev = cells.expand(weighted.theta[H - 1]);
      r.weighted_grad_norm = l2_norm(weighted_loss_gradient(nu[H - 1], g_prev, target, cells));
      weighted.refit(mdp, cells, nu);
    }
    trace.push_back(r);
  }
  return trace;
}

/// Per-round mean of the uniform gradient norm over `replicates` independent
/// data streams (seeds derived from cfg.seed) on the same MDP.
inline std::vector<double> fqi_mean_grad_norms(const TabularMdp& mdp, FqiConfig cfg,
                                               std::size_t replicates) {
  if (replicates == 0) throw ConfigError("need at least one replicate");
  std::vector<double> mean(cfg.episodes, 0.0);
  const std::uint64_t base = cfg.seed;
  for (std::size_t r = 0; r < replicates; ++r) {
    cfg.seed = derive_seed(base, "fqi-stream", r);
    const auto trace = fqi_run(mdp, cfg);
    for (std::size_t i = 0; i < trace.size(); ++i) mean[i] += trace[i].grad_norm;
  }
  for (double& x : mean) x /= static_cast<double>(replicates);
  return mean;
}

/// Least-squares slope of log(y) on log(k) over k in [k_lo, k_hi], where
/// y[i] belongs to k = i + 1.
inline double log_log_slope(std::span<const double> y, std::uint64_t k_lo, std::uint64_t k_hi) {
  if (k_lo < 1 || k_hi > y.size() || k_lo >= k_hi) throw DomainError("invalid slope range");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::uint64_t k = k_lo; k <= k_hi; ++k) {
    if (!(y[k - 1] > 0.0)) throw DomainError("log-log slope needs positive values");
    const double x = std::log(static_cast<double>(k)), v = std::log(y[k - 1]);
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
    ++m;
  }
  const double md = static_cast<double>(m);
  return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

}  // namespace plastic_replay::theory
