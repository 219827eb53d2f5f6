#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "plastic_replay/decay.hpp"
#include "plastic_replay/envs/tabular_mdp.hpp"
#include "plastic_replay/rng.hpp"
#include "plastic_replay/theory/bellman.hpp"
#include "plastic_replay/theory/decomposition.hpp"
#include "plastic_replay/theory/distribution.hpp"
#include "plastic_replay/theory/fqi.hpp"
#include "plastic_replay/theory/suboptimality.hpp"

namespace plastic_replay::cli {

struct VerifyOptions {
  bool quick = false;
  /// Mutation switch: scale the distribution-shift term by 1 instead of 1/k.
  bool inject_shift_bug = false;
  std::uint64_t seed = 20240601;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Worst observed value of the checked quantity.
  double residual = 0.0;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

using namespace plastic_replay::theory;

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Random MDP with S in [2, 5], A in [2, 3], H in [2, 4].
inline TabularMdp random_small_mdp(Rng& rng) {
  std::uniform_int_distribution<std::size_t> S(2, 5), A(2, 3), H(2, 4);
  const std::size_t s = S(rng), a = A(rng), h = H(rng);
  return envs::random_mdp(rng(), s, a, h);
}

inline QSlice random_slice(Rng& rng, std::size_t n, double hi) {
  std::uniform_real_distribution<double> u(0.0, hi);
  QSlice q(n);
  for (double& x : q) x = u(rng);
  return q;
}

inline CheckResult check_recursion(const VerifyOptions& o) {
  const std::size_t visits = o.quick ? 1000 : 10'000;
  Rng rng = make_rng(o.seed, "verify-recursion");
  const std::size_t S = 4, A = 3;
  EmpiricalDistribution mu(S, A);
  std::vector<std::uint64_t> counts(S * A, 0);
  std::uniform_int_distribution<std::size_t> ds(0, S - 1), da(0, A - 1);
  for (std::size_t i = 0; i < visits; ++i) {
    const Atom x{ds(rng), da(rng)};
    mu = dist_update(std::move(mu), x);
    ++counts[x.state * A + x.action];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    worst = std::max(worst, std::abs(mu.masses[i] - static_cast<double>(counts[i]) / static_cast<double>(visits)));
  return {"distribution recursion", worst <= 1e-12, worst,
          std::to_string(visits) + " visits, max |mass - frequency|", 0.0};
}

/// E_{(s,a)~mu, s'~P}[(f(s,a) - r(s,a) - max g(s'))^2] by enumeration.
inline double enumerated_loss(const EmpiricalDistribution& mu, const TabularMdp& mdp,
                              std::size_t h, std::span<const double> f,
                              std::span<const double> g) {
  const std::size_t S = mdp.states, A = mdp.actions;
  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const auto row = mdp.row(h, s, a);
      for (std::size_t s2 = 0; s2 < S; ++s2) {
        const double v = *std::max_element(g.begin() + s2 * A, g.begin() + (s2 + 1) * A);
        const double e = f[s * A + a] - mdp.reward(h, s, a) - v;
        total += mu.masses[s * A + a] * row[s2] * e * e;
      }
    }
  return total;
}

inline CheckResult check_loss_decomposition(const VerifyOptions& o) {
  const std::size_t instances = o.quick ? 10 : 50;
  Rng rng = make_rng(o.seed, "verify-loss");
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const TabularMdp mdp = random_small_mdp(rng);
    const std::size_t n = mdp.atoms();
    const std::size_t h = std::uniform_int_distribution<std::size_t>(1, mdp.horizon)(rng);
    EmpiricalDistribution mu(mdp.states, mdp.actions);
    for (int i = 0; i < 20; ++i)
      mu = dist_update(std::move(mu), {std::uniform_int_distribution<std::size_t>(0, mdp.states - 1)(rng),
                                       std::uniform_int_distribution<std::size_t>(0, mdp.actions - 1)(rng)});
    const double H = static_cast<double>(mdp.horizon);
    const QSlice f = random_slice(rng, n, H);
    const QSlice g = h == mdp.horizon ? QSlice(n, 0.0) : random_slice(rng, n, H);
    const auto dec = population_loss_decomposition(mu, mdp, h, f, g);
    worst = std::max(worst, std::abs(dec.total() - enumerated_loss(mu, mdp, h, f, g)));
  }
  return {"population loss decomposition", worst <= 1e-12, worst,
          std::to_string(instances) + " instances, |residual + variance - enumeration|", 0.0};
}

struct GradientInstance {
  TabularMdp mdp;
  std::size_t h = 1;
  std::uint64_t k = 2;
  CellMap cells;
  EmpiricalDistribution mu_k;
  Atom visit;
  QSlice f_prev, f_next_prev, f_next_cur;
};

/// f_prev is the cell-mean fit of the previous round, so it satisfies the
/// minimizer precondition by construction.
inline GradientInstance random_gradient_instance(Rng& rng) {
  GradientInstance g;
  g.mdp = random_small_mdp(rng);
  const std::size_t S = g.mdp.states, A = g.mdp.actions, n = g.mdp.atoms();
  g.h = std::uniform_int_distribution<std::size_t>(1, g.mdp.horizon)(rng);
  g.k = std::uniform_int_distribution<std::uint64_t>(2, 64)(rng);
  g.cells = (rng() & 1) ? CellMap::by_action(S, A) : CellMap::identity(S, A);
  std::uniform_int_distribution<std::size_t> ds(0, S - 1), da(0, A - 1);
  EmpiricalDistribution mu(S, A);
  for (std::uint64_t i = 1; i < g.k; ++i) mu = dist_update(std::move(mu), {ds(rng), da(rng)});
  const double H = static_cast<double>(g.mdp.horizon);
  const bool last = g.h == g.mdp.horizon;
  g.f_next_prev = last ? QSlice(n, 0.0) : random_slice(rng, n, H);
  g.f_next_cur = last ? QSlice(n, 0.0) : random_slice(rng, n, H);
  std::vector<double> theta = random_slice(rng, g.cells.cells, H);
  fit_cells(mu.masses, bellman_apply(g.mdp, g.h, g.f_next_prev), g.cells, theta);
  g.f_prev = g.cells.expand(theta);
  g.visit = {ds(rng), da(rng)};
  g.mu_k = dist_update(std::move(mu), g.visit);
  return g;
}

inline GradientDecomposition decompose(const GradientInstance& g, bool inject_bug) {
  return theory::detail::decompose_initial_gradient(
      g.mu_k, g.visit, g.mdp, g.h, g.f_prev, g.f_next_prev, g.f_next_cur, g.k, g.cells,
      inject_bug ? 1.0 : 1.0 / static_cast<double>(g.k));
}

inline CheckResult check_gradient_identity(const VerifyOptions& o) {
  const std::size_t instances = o.quick ? 10 : 50;
  Rng rng = make_rng(o.seed, "verify-gradient");
  double worst = 0.0, drift_at_h = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const GradientInstance g = random_gradient_instance(rng);
    const auto dec = decompose(g, o.inject_shift_bug);
    worst = std::max(worst, dec.identity_residual());
    if (g.h == g.mdp.horizon)
      for (double x : dec.target_drift) drift_at_h = std::max(drift_at_h, std::abs(x));
  }
  const bool ok = worst <= 1e-9 && drift_at_h == 0.0;
  return {"gradient decomposition identity", ok, worst,
          std::to_string(instances) + " instances, max |lhs - shift - drift|; max |drift| at h=H = " +
              std::to_string(drift_at_h),
          0.0};
}

inline CheckResult check_finite_differences(const VerifyOptions& o) {
  const std::size_t instances = o.quick ? 10 : 50;
  Rng rng = make_rng(o.seed, "verify-fd");
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const GradientInstance g = random_gradient_instance(rng);
    const auto dec = decompose(g, false);
    const QSlice target = bellman_apply(g.mdp, g.h, g.h == g.mdp.horizon ? QSlice(g.mdp.atoms(), 0.0) : g.f_next_cur);
    // theta of f_prev: every cell is constant, read it off any member atom.
    std::vector<double> theta(g.cells.cells, 0.0);
    for (std::size_t i = 0; i < g.cells.cell_of.size(); ++i) theta[g.cells.cell_of[i]] = g.f_prev[i];
    const double step = 1e-5;
    double scale = 1.0, err = 0.0;
    for (std::size_t c = 0; c < theta.size(); ++c) {
      auto plus = theta, minus = theta;
      plus[c] += step;
      minus[c] -= step;
      const double fd = (weighted_loss(g.mu_k.masses, g.cells.expand(plus), target) -
                         weighted_loss(g.mu_k.masses, g.cells.expand(minus), target)) /
                        (2.0 * step);
      err = std::max(err, std::abs(fd - dec.lhs[c]));
      scale = std::max(scale, std::abs(dec.lhs[c]));
    }
    worst = std::max(worst, err / scale);
  }
  return {"closed-form gradient vs finite differences", worst <= 1e-6, worst,
          std::to_string(instances) + " instances, max relative error", 0.0};
}

inline CheckResult check_decay_slope(const VerifyOptions& o) {
  const std::size_t instances = o.quick ? 3 : 10;
  double lo = 0.0, hi = -1e300;
  bool ok = true;
  for (std::size_t t = 0; t < instances; ++t) {
    const TabularMdp mdp = envs::random_mdp(derive_seed(o.seed, "verify-slope-mdp", t), 6, 3, 3);
    FqiConfig cfg;
    cfg.episodes = 1024;
    cfg.seed = derive_seed(o.seed, "verify-slope-data", t);
    const auto mean = fqi_mean_grad_norms(mdp, cfg, 16);
    const double slope = log_log_slope(mean, 16, 1024);
    lo = t == 0 ? slope : std::min(lo, slope);
    hi = std::max(hi, slope);
    ok = ok && slope >= -1.2 && slope <= -0.8;
  }
  return {"initial gradient decays as 1/k at h=H", ok, hi,
          std::to_string(instances) + " MDPs, log-log slopes in [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "]",
          0.0};
}

inline CheckResult check_suboptimality(const VerifyOptions& o) {
  const std::size_t instances = o.quick ? 20 : 100;
  Rng rng = make_rng(o.seed, "verify-bound");
  std::size_t holds = 0;
  double tightest = -1e300, at_optimum = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    std::uniform_int_distribution<std::size_t> S(1, 5), A(1, 3), H(1, 4);
    const std::size_t s = S(rng), a = A(rng), h = H(rng);
    const TabularMdp mdp = envs::random_mdp(rng(), s, a, h);
    TabularQ f(s, a, h);
    std::uniform_real_distribution<double> u(0.0, static_cast<double>(h));
    for (double& x : f.values) x = u(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, s - 1)(rng);
    const auto r = suboptimality_check(mdp, f, start);
    holds += r.holds();
    tightest = std::max(tightest, r.gap - r.bound);
    const auto star = suboptimality_check(mdp, optimal_q(mdp), start);
    at_optimum = std::max({at_optimum, std::abs(star.gap), std::abs(star.bound)});
  }
  const bool ok = holds == instances && at_optimum == 0.0;
  return {"suboptimality bound", ok, tightest,
          std::to_string(holds) + "/" + std::to_string(instances) +
              " hold, max (gap - bound); at Q*: max |gap|, |bound| = " + std::to_string(at_optimum),
          0.0};
}

inline CheckResult check_swd_restoration(const VerifyOptions& o) {
  const std::size_t instances = o.quick ? 3 : 10;
  double worst = 1.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const TabularMdp mdp = envs::random_mdp(derive_seed(o.seed, "verify-swd-mdp", t), 6, 3, 3);
    FqiConfig cfg;
    cfg.episodes = 1024;
    cfg.weighting = DecaySchedule::linear(cfg.episodes, 0.1);
    cfg.seed = derive_seed(o.seed, "verify-swd-data", t);
    const auto trace = fqi_run(mdp, cfg);
    std::size_t wins = 0, rounds = 0;
    for (const auto& r : trace)
      if (r.k > cfg.episodes / 2) {
        ++rounds;
        wins += r.weighted_grad_norm > r.grad_norm;
      }
    worst = std::min(worst, static_cast<double>(wins) / static_cast<double>(rounds));
  }
  return {"age weighting restores late gradients", worst >= 0.9, worst,
          std::to_string(instances) + " MDPs, min fraction of rounds k > K/2 won", 0.0};
}

}  // namespace detail

inline std::vector<CheckResult> run_verify_suite(const VerifyOptions& o) {
  using Check = CheckResult (*)(const VerifyOptions&);
  const Check checks[] = {detail::check_recursion,        detail::check_loss_decomposition,
                          detail::check_gradient_identity, detail::check_finite_differences,
                          detail::check_decay_slope,       detail::check_suboptimality,
                          detail::check_swd_restoration};
  std::vector<CheckResult> out;
  for (Check c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r = c(o);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace plastic_replay::cli
