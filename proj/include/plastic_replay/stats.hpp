#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "plastic_replay/error.hpp"
#include "plastic_replay/rng.hpp"

namespace plastic_replay {

/// Interquartile mean with fractional trimming: the sorted values each carry
/// unit mass on [i, i+1) and exactly n/4 of mass is cut from each tail.
inline double iqm(std::span<const double> values) {
  if (values.empty()) throw DomainError("iqm of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double lo = n / 4.0, hi = 3.0 * n / 4.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::max(lo, static_cast<double>(i));
    const double b = std::min(hi, static_cast<double>(i + 1));
    if (b > a) sum += (b - a) * v[i];
  }
  // Clamping absorbs rounding so the result never leaves [min, max].
  return std::clamp(sum / (hi - lo), v.front(), v.back());
}

/// Final scores of several runs on each of several tasks.
struct ScoreMatrix {
  std::vector<std::string> tasks;
  std::vector<std::vector<double>> scores;  // [task][run]

  void validate() const {
    if (scores.empty()) throw DomainError("score matrix has no tasks");
    if (!tasks.empty() && tasks.size() != scores.size())
      throw DomainError("task names do not match the score rows");
    for (std::size_t t = 0; t < scores.size(); ++t)
      if (scores[t].empty()) throw DomainError("task " + std::to_string(t) + " has no runs");
  }

  std::vector<double> pooled() const {
    std::vector<double> all;
    for (const auto& row : scores) all.insert(all.end(), row.begin(), row.end());
    return all;
  }
};

inline double iqm(const ScoreMatrix& m) {
  m.validate();
  return iqm(m.pooled());
}

/// Linear-interpolation percentile of sorted data, q in [0, 1].
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("percentile of an empty list");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::size_t kDefaultBootstrapReps = 2000;

/// Called with (rep, task, run index) for every resampled run.
using BootstrapObserver = std::function<void(std::size_t, std::size_t, std::size_t)>;

/// Percentile interval of the IQM under resampling runs with replacement
/// within each task.
inline ConfidenceInterval stratified_bootstrap_ci(const ScoreMatrix& m, std::size_t reps,
                                                  double level, Rng& rng,
                                                  const BootstrapObserver& observer = {}) {
  m.validate();
  if (reps < 100) throw DomainError("bootstrap needs at least 100 repetitions");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  std::vector<double> stats(reps), pool;
  for (std::size_t r = 0; r < reps; ++r) {
    pool.clear();
    for (std::size_t t = 0; t < m.scores.size(); ++t) {
      const auto& row = m.scores[t];
      const double n = static_cast<double>(row.size());
      for (std::size_t j = 0; j < row.size(); ++j) {
        const auto i = std::min(row.size() - 1, static_cast<std::size_t>(uniform01(rng) * n));
        if (observer) observer(r, t, i);
        pool.push_back(row[i]);
      }
    }
    stats[r] = iqm(pool);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  return {percentile_sorted(stats, tail), percentile_sorted(stats, 1.0 - tail)};
}

}  // namespace plastic_replay
