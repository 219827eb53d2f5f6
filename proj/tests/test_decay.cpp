#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "plastic_replay/decay.hpp"
#include "plastic_replay/sampling.hpp"

using namespace plastic_replay;

TEST(DecayWeight, LinearPinned) {
  const auto s = DecaySchedule::linear(100'000, 0.1);
  EXPECT_EQ(decay_weight(s, 0), 1.0);
  EXPECT_NEAR(decay_weight(s, 50'000), 0.5, 1e-15);
  EXPECT_EQ(decay_weight(s, 95'000), 0.1);
  EXPECT_EQ(decay_weight(s, 10'000'000), 0.1);
}

TEST(DecayWeight, SwaEndpoints) {
  const auto s = DecaySchedule::swa(100'000, 0.1);
  EXPECT_EQ(decay_weight(s, 0), 0.1);
  EXPECT_EQ(decay_weight(s, 90'000), 1.0);
  EXPECT_NEAR(decay_weight(s, 40'000), 0.5, 1e-15);
}

TEST(DecayWeight, PolynomialHalfAge) {
  const auto s = DecaySchedule::polynomial(1000, 0.1, 2.0);
  EXPECT_NEAR(decay_weight(s, 500), 0.25, 1e-15);
  EXPECT_EQ(decay_weight(s, 2000), 0.1);
}

TEST(DecayWeight, ExponentialAtHorizon) {
  const auto s = DecaySchedule::exponential(1000, 0.1, 1.0);
  EXPECT_NEAR(decay_weight(s, 1000), 0.36787944117144233, 1e-15);
  EXPECT_EQ(decay_weight(s, 0), 1.0);
}

TEST(DecayWeight, ExponentialTauStretches) {
  const auto s = DecaySchedule::exponential(1000, 0.01, 2.0);
  EXPECT_NEAR(decay_weight(s, 1000), 0.60653065971263342, 1e-15);
}

TEST(DecaySchedule, InvalidParametersRejected) {
  EXPECT_THROW(DecaySchedule::linear(0, 0.1), ConfigError);
  EXPECT_THROW(DecaySchedule::linear(10, 0.0), ConfigError);
  EXPECT_THROW(DecaySchedule::linear(10, 1.5), ConfigError);
  EXPECT_THROW(DecaySchedule::exponential(10, 0.1, 0.0), ConfigError);
  EXPECT_THROW(DecaySchedule::polynomial(10, 0.1, -1.0), ConfigError);
  EXPECT_NO_THROW(DecaySchedule::linear(1, 1.0));
}

TEST(DecaySchedule, KindNamesRoundTrip) {
  for (auto k : {DecayKind::linear, DecayKind::swa, DecayKind::exponential, DecayKind::polynomial})
    EXPECT_EQ(parse_decay_kind(to_string(k)), k);
  EXPECT_FALSE(parse_decay_kind("cosine").has_value());
}

TEST(DecayWeight, BoundsAndMonotonicity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t T = 1 + rng() % 5000;
    const double w_min = 0.01 + 0.99 * std::uniform_real_distribution<double>()(rng);
    const DecaySchedule all[] = {DecaySchedule::linear(T, w_min), DecaySchedule::swa(T, w_min),
                                 DecaySchedule::exponential(T, w_min, 0.5 + (rng() % 4)),
                                 DecaySchedule::polynomial(T, w_min, 0.5 + (rng() % 4))};
    for (const auto& s : all) {
      double prev = decay_weight(s, 0);
      for (std::uint64_t age = 0; age < 3 * T; age += 1 + T / 50) {
        const double w = decay_weight(s, age);
        ASSERT_GE(w, w_min);
        ASSERT_LE(w, 1.0);
        if (s.kind == DecayKind::swa) ASSERT_GE(w, prev);
        else ASSERT_LE(w, prev);
        prev = w;
      }
    }
  }
}

TEST(NormalizedProbabilities, Pinned) {
  const std::vector<double> w{1.0, 0.5, 0.1};
  const auto p = normalized_probabilities(w);
  EXPECT_NEAR(p[0], 0.625, 1e-15);
  EXPECT_NEAR(p[1], 0.3125, 1e-15);
  EXPECT_NEAR(p[2], 0.0625, 1e-15);
}

TEST(NormalizedProbabilities, Symmetric) {
  const std::vector<double> w(4, 3.7);
  for (double p : normalized_probabilities(w)) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(NormalizedProbabilities, Errors) {
  EXPECT_THROW(normalized_probabilities(std::vector<double>{}), EmptyBufferError);
  EXPECT_THROW(normalized_probabilities(std::vector<double>{1.0, 0.0}), DomainError);
  EXPECT_THROW(normalized_probabilities(std::vector<double>{1.0, NAN}), DomainError);
}

TEST(NormalizedProbabilities, ProportionalAndNormalized) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (std::size_t n : {1u, 10u, 1000u, 1'000'000u}) {
    std::vector<double> w(n);
    for (double& x : w) x = u(rng);
    const auto p = normalized_probabilities(w);
    double total = 0.0;
    for (double x : p) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t i = 1; i < std::min<std::size_t>(n, 100); ++i)
      EXPECT_NEAR(p[i] / p[0], w[i] / w[0], 1e-12);
  }
}
