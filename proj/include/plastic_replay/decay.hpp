#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "plastic_replay/error.hpp"

namespace plastic_replay {

enum class DecayKind { linear, swa, exponential, polynomial };

inline std::string_view to_string(DecayKind k) {
  switch (k) {
    case DecayKind::linear: return "linear";
    case DecayKind::swa: return "swa";
    case DecayKind::exponential: return "exponential";
    case DecayKind::polynomial: return "polynomial";
  }
  return "?";
}

inline std::optional<DecayKind> parse_decay_kind(std::string_view s) {
  if (s == "linear") return DecayKind::linear;
  if (s == "swa") return DecayKind::swa;
  if (s == "exponential") return DecayKind::exponential;
  if (s == "polynomial") return DecayKind::polynomial;
  return std::nullopt;
}

/// Weight-versus-age law.
///
///   linear       max(w_min, 1 - age/T)
///   swa          min(1, w_min + age/T)            (favours old data)
///   exponential  max(w_min, exp(-(age/T)/tau))
///   polynomial   max(w_min, max(0, 1 - age/T)^p)
///
/// Exponential decay runs on normalized age age/T; on raw steps a unit tau
/// would put every sample older than a few steps at the floor.
struct DecaySchedule {
  DecayKind kind = DecayKind::linear;
  std::uint64_t decay_steps = 100'000;
  double min_weight = 0.1;
  double tau = 1.0;
  double power = 2.0;

  static DecaySchedule linear(std::uint64_t T, double w_min) {
    return make(DecayKind::linear, T, w_min);
  }
  static DecaySchedule swa(std::uint64_t T, double w_min) {
    return make(DecayKind::swa, T, w_min);
  }
  static DecaySchedule exponential(std::uint64_t T, double w_min, double tau = 1.0) {
    DecaySchedule s = make(DecayKind::exponential, T, w_min);
    s.tau = tau;
    s.validate();
    return s;
  }
  static DecaySchedule polynomial(std::uint64_t T, double w_min, double p = 2.0) {
    DecaySchedule s = make(DecayKind::polynomial, T, w_min);
    s.power = p;
    s.validate();
    return s;
  }

  void validate() const {
    if (decay_steps < 1) throw ConfigError("decay_steps must be >= 1");
    if (!(min_weight > 0.0 && min_weight <= 1.0))
      throw ConfigError("min_weight must lie in (0, 1], got " + std::to_string(min_weight));
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(power > 0.0)) throw ConfigError("power must be positive");
  }

 private:
  static DecaySchedule make(DecayKind k, std::uint64_t T, double w_min) {
    DecaySchedule s;
    s.kind = k;
    s.decay_steps = T;
    s.min_weight = w_min;
    s.validate();
    return s;
  }
};

inline double decay_weight(const DecaySchedule& s, std::uint64_t age) noexcept {
  const double x = static_cast<double>(age) / static_cast<double>(s.decay_steps);
  switch (s.kind) {
    case DecayKind::linear:
      return std::max(s.min_weight, 1.0 - x);
    case DecayKind::swa:
      return std::min(1.0, s.min_weight + x);
    case DecayKind::exponential:
      return std::max(s.min_weight, std::exp(-x / s.tau));
    case DecayKind::polynomial:
      return std::max(s.min_weight, std::pow(std::max(0.0, 1.0 - x), s.power));
  }
  return s.min_weight;
}

}  // namespace plastic_replay
