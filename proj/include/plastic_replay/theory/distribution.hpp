#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "plastic_replay/error.hpp"

namespace plastic_replay::theory {

struct Atom {
  std::size_t state = 0;
  std::size_t action = 0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// State-action frequencies of a replay buffer holding one sample per
/// episode at a fixed step.
struct EmpiricalDistribution {
  std::size_t states = 0;
  std::size_t actions = 0;
  std::vector<double> masses;  // [s][a]
  std::uint64_t count = 0;

  EmpiricalDistribution() = default;
  EmpiricalDistribution(std::size_t S, std::size_t A) : states(S), actions(A), masses(S * A, 0.0) {
    if (S == 0 || A == 0) throw ConfigError("distribution needs positive state and action counts");
  }

  std::size_t index(Atom x) const {
    if (x.state >= states || x.action >= actions)
      throw BoundsError("atom (" + std::to_string(x.state) + ", " + std::to_string(x.action) +
                        ") out of range");
    return x.state * actions + x.action;
  }
  double mass(Atom x) const { return masses[index(x)]; }

  static EmpiricalDistribution point_mass(std::size_t S, std::size_t A, Atom x) {
    EmpiricalDistribution d(S, A);
    d.masses[d.index(x)] = 1.0;
    d.count = 1;
    return d;
  }
};

/// mu^{k+1} = k/(k+1) mu^k + 1/(k+1) delta_visit.
inline EmpiricalDistribution dist_update(EmpiricalDistribution mu, Atom visit) {
  const std::size_t i = mu.index(visit);
  const double k = static_cast<double>(mu.count);
  const double keep = k / (k + 1.0);
  for (double& m : mu.masses) m *= keep;
  mu.masses[i] += 1.0 / (k + 1.0);
  ++mu.count;
  return mu;
}

}  // namespace plastic_replay::theory
