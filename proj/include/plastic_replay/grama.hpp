#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "plastic_replay/nn.hpp"

namespace plastic_replay {

using LayerValues = std::vector<std::vector<double>>;

/// Default inactivity threshold for reports.
inline constexpr double kDefaultGramaTau = 0.1;

/// Each neuron's batch-mean gradient magnitude divided by its layer's mean.
/// Layers whose mean is below 1e-12 score 0 everywhere.
inline LayerValues grama_scores(const LayerValues& magnitudes) {
  LayerValues scores;
  scores.reserve(magnitudes.size());
  for (const auto& layer : magnitudes) {
    std::vector<double> s(layer.size(), 0.0);
    if (!layer.empty()) {
      const double mean =
          std::accumulate(layer.begin(), layer.end(), 0.0) / static_cast<double>(layer.size());
      if (mean >= 1e-12)
        for (std::size_t i = 0; i < layer.size(); ++i) s[i] = layer[i] / mean;
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

/// Fraction of all neurons, pooled over layers, with score <= tau.
inline double inactive_fraction(const LayerValues& scores, double tau) {
  std::size_t total = 0, inactive = 0;
  for (const auto& layer : scores) {
    total += layer.size();
    for (double s : layer) inactive += (s <= tau);
  }
  return total == 0 ? 0.0 : static_cast<double>(inactive) / static_cast<double>(total);
}

/// Sum of |parameter gradients| divided by the batch size.
inline double grad_l1(const nn::GradientRecord& record) {
  double s = 0.0;
  for (double g : record.param_grads) s += std::abs(g);
  return record.batch_size == 0 ? s : s / static_cast<double>(record.batch_size);
}

struct GramaReport {
  LayerValues scores;
  double inactive_fraction = 0.0;
  double mean_score = 0.0;
  double tau = kDefaultGramaTau;
  double grad_l1 = 0.0;
};

/// GraMa over the hidden layers of a recorded batch. The output layer is
/// left out: only the taken action's output unit ever receives gradient.
inline GramaReport grama_report(const nn::GradientRecord& record,
                                double tau = kDefaultGramaTau) {
  LayerValues mags;
  const double n = record.batch_size == 0 ? 1.0 : static_cast<double>(record.batch_size);
  for (std::size_t l = 0; l + 1 < record.preact_abs.size(); ++l) {
    std::vector<double> m(record.preact_abs[l]);
    for (double& x : m) x /= n;
    mags.push_back(std::move(m));
  }
  GramaReport r;
  r.scores = grama_scores(mags);
  r.tau = tau;
  r.inactive_fraction = inactive_fraction(r.scores, tau);
  std::size_t count = 0;
  double sum = 0.0;
  for (const auto& layer : r.scores) {
    count += layer.size();
    sum = std::accumulate(layer.begin(), layer.end(), sum);
  }
  r.mean_score = count == 0 ? 0.0 : sum / static_cast<double>(count);
  r.grad_l1 = grad_l1(record);
  return r;
}

}  // namespace plastic_replay
