#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "plastic_replay/error.hpp"

namespace plastic_replay {

/// Proportional prioritized replay settings. Defaults follow the SAC table
/// (alpha 0.6, beta 0.4 annealed by 1e-6 per sampling call).
struct PerConfig {
  double alpha = 0.6;
  double beta = 0.4;
  double beta_increment = 1e-6;
  double epsilon = 1e-6;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("per alpha must lie in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("per beta must lie in [0, 1]");
    if (!(beta_increment >= 0.0)) throw ConfigError("per beta_increment must be >= 0");
    if (!(epsilon > 0.0)) throw ConfigError("per epsilon must be positive");
  }
};

/// beta after k annealing steps, capped at 1.
inline double annealed_beta(const PerConfig& cfg, std::uint64_t k) {
  return std::min(1.0, cfg.beta + static_cast<double>(k) * cfg.beta_increment);
}

inline double per_priority(double td_error, const PerConfig& cfg) {
  return std::pow(std::abs(td_error) + cfg.epsilon, cfg.alpha);
}

struct PerWeights {
  std::vector<double> priorities;
  std::vector<double> is_weights;
};

/// priority_i = (|delta_i| + eps)^alpha and
/// is_weight_i = (1 / (N P(i)))^beta / max_j (1 / (N P(j)))^beta.
inline PerWeights per_priorities_and_weights(std::span<const double> td_errors,
                                             const PerConfig& cfg, std::size_t n,
                                             std::span<const double> probs) {
  if (n == 0) throw ConfigError("PER importance weights need a positive buffer size");
  PerWeights out;
  out.priorities.reserve(td_errors.size());
  for (double d : td_errors) out.priorities.push_back(per_priority(d, cfg));

  out.is_weights.reserve(probs.size());
  double max_w = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw DomainError("sampling probabilities must be strictly positive");
    const double w = std::pow(1.0 / (static_cast<double>(n) * p), cfg.beta);
    out.is_weights.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (double& w : out.is_weights) w /= max_w;
  return out;
}

}  // namespace plastic_replay
