#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "plastic_replay/nn.hpp"

using namespace plastic_replay;
using namespace plastic_replay::nn;

namespace {

// Straight-line re-evaluation from the layer descriptions, sharing no code
// with nn::forward.
std::vector<double> reference_forward(const Mlp& net, std::vector<double> x) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Layer& L = net.layers()[l];
    std::vector<double> y(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      double z = net.bias(l, o);
      for (std::size_t i = 0; i < L.in; ++i) z += net.weight(l, o, i) * x[i];
      y[o] = (L.activation == Activation::relu && z < 0.0) ? 0.0 : z;
    }
    x = std::move(y);
  }
  return x;
}

// Scalar loss sum_j c_j * out_j, whose output gradient is c.
double linear_loss(const Mlp& net, const std::vector<double>& x, const std::vector<double>& c) {
  const auto y = reference_forward(net, x);
  double s = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) s += c[j] * y[j];
  return s;
}

Mlp random_net(Rng& rng, std::size_t depth) {
  std::uniform_int_distribution<std::size_t> width(1, 6);
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i <= depth; ++i) sizes.push_back(width(rng));
  Mlp net(sizes);
  net.init_uniform(rng);
  return net;
}

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(Mlp, ShapeAndLayout) {
  Mlp net({3, 4, 2});
  EXPECT_EQ(net.parameter_count(), 3u * 4 + 4 + 4 * 2 + 2);
  EXPECT_EQ(net.layers()[0].activation, Activation::relu);
  EXPECT_EQ(net.layers()[1].activation, Activation::identity);
  EXPECT_THROW(Mlp({3}), ShapeError);
  EXPECT_THROW(Mlp({3, 0, 2}), ShapeError);
}

TEST(Mlp, InitWithinFanInBound) {
  Mlp net({16, 8, 3});
  Rng rng(1);
  net.init_uniform(rng);
  for (std::size_t l = 0; l < 2; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.layers()[l].in));
    for (std::size_t o = 0; o < net.layers()[l].out; ++o) {
      EXPECT_LE(std::abs(net.bias(l, o)), bound);
      for (std::size_t i = 0; i < net.layers()[l].in; ++i) EXPECT_LE(std::abs(net.weight(l, o, i)), bound);
    }
  }
  Mlp again({16, 8, 3});
  Rng rng2(1);
  again.init_uniform(rng2);
  EXPECT_TRUE(std::equal(net.params().begin(), net.params().end(), again.params().begin()));
}

TEST(Forward, ZeroWeightsGiveBias) {
  Mlp net({3, 2});
  net.bias(0, 0) = 1.5;
  net.bias(0, 1) = -2.0;
  const auto c = forward(net, std::vector<double>{4, 5, 6});
  EXPECT_EQ(c.output, (std::vector<double>{1.5, -2.0}));
}

TEST(Forward, ReluClipsNegatives) {
  Mlp net({2, 2, 2});
  for (std::size_t i = 0; i < 2; ++i) {
    net.weight(0, i, i) = 1.0;
    net.weight(1, i, i) = 1.0;
  }
  EXPECT_EQ(forward(net, std::vector<double>{-1, 2}).output, (std::vector<double>{0, 2}));
}

TEST(Forward, DimensionMismatch) {
  Mlp net({3, 2});
  EXPECT_THROW(forward(net, std::vector<double>{1, 2}), ShapeError);
}

TEST(Forward, MatchesReferenceEvaluation) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Mlp net = random_net(rng, 1 + t % 4);
    const auto x = random_vec(rng, net.input_dim());
    const auto y = forward(net, x).output;
    const auto r = reference_forward(net, x);
    for (std::size_t j = 0; j < y.size(); ++j) EXPECT_NEAR(y[j], r[j], 1e-12);
  }
}

TEST(Backward, ZeroLossGradientGivesZeros) {
  Rng rng(3);
  const Mlp net = random_net(rng, 3);
  const auto c = forward(net, random_vec(rng, net.input_dim()));
  const auto rec = backward(net, c, std::vector<double>(net.output_dim(), 0.0));
  for (double g : rec.param_grads) EXPECT_EQ(g, 0.0);
  for (const auto& layer : rec.preact_abs)
    for (double g : layer) EXPECT_EQ(g, 0.0);
}

TEST(Backward, SingleLinearLayerSquaredLoss) {
  Mlp net({3, 1});
  net.weight(0, 0, 0) = 0.5;
  net.weight(0, 0, 1) = -1.0;
  net.weight(0, 0, 2) = 2.0;
  net.bias(0, 0) = 0.25;
  const std::vector<double> x{1.0, 2.0, 3.0};
  const double y = 1.0;
  const auto c = forward(net, x);
  const double yhat = c.output[0];
  const auto rec = backward(net, c, std::vector<double>{2.0 * (yhat - y)});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(rec.param_grads[i], 2.0 * (yhat - y) * x[i]);
  EXPECT_DOUBLE_EQ(rec.param_grads[3], 2.0 * (yhat - y));
}

TEST(Backward, MismatchedCacheRejected) {
  Mlp a({3, 4, 2}), b({3, 5, 2});
  const auto c = forward(a, std::vector<double>{1, 2, 3});
  EXPECT_THROW(backward(b, c, std::vector<double>{1, 1}), ShapeError);
  EXPECT_THROW(backward(a, c, std::vector<double>{1}), ShapeError);
}

TEST(Backward, MatchesCentralFiniteDifferences) {
  Rng rng(4);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    Mlp net = random_net(rng, 3);
    const auto x = random_vec(rng, net.input_dim());
    const auto cvec = random_vec(rng, net.output_dim());
    const auto rec = backward(net, forward(net, x), cvec);
    const double h = 1e-5;
    for (std::size_t p = 0; p < net.parameter_count(); ++p) {
      const double keep = net.params()[p];
      net.params()[p] = keep + h;
      const double up = linear_loss(net, x, cvec);
      net.params()[p] = keep - h;
      const double down = linear_loss(net, x, cvec);
      net.params()[p] = keep;
      const double fd = (up - down) / (2 * h);
      const double err = std::abs(fd - rec.param_grads[p]) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Backward, FirstLayerIsOuterProductOfPreactGrads) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Mlp net = random_net(rng, 3);
    const auto x = random_vec(rng, net.input_dim());
    const auto rec = backward(net, forward(net, x), random_vec(rng, net.output_dim()));
    const Layer& L = net.layers()[0];
    for (std::size_t o = 0; o < L.out; ++o) {
      for (std::size_t i = 0; i < L.in; ++i)
        EXPECT_NEAR(rec.param_grads[L.weight_offset + o * L.in + i], rec.preact_grads[0][o] * x[i], 1e-12);
      EXPECT_NEAR(rec.param_grads[L.bias_offset + o], rec.preact_grads[0][o], 1e-12);
    }
  }
}

TEST(Backward, AccumulatesOverBatch) {
  Rng rng(6);
  const Mlp net = random_net(rng, 2);
  const auto x1 = random_vec(rng, net.input_dim()), x2 = random_vec(rng, net.input_dim());
  const auto g = random_vec(rng, net.output_dim());
  auto rec = GradientRecord::zeros_like(net);
  std::vector<double> a, b;
  backward_accumulate(net, forward(net, x1), g, rec, a, b);
  backward_accumulate(net, forward(net, x2), g, rec, a, b);
  const auto r1 = backward(net, forward(net, x1), g), r2 = backward(net, forward(net, x2), g);
  EXPECT_EQ(rec.batch_size, 2u);
  for (std::size_t p = 0; p < rec.param_grads.size(); ++p)
    EXPECT_NEAR(rec.param_grads[p], r1.param_grads[p] + r2.param_grads[p], 1e-12);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0};
  auto s = AdamState::for_parameters(2, 0.1);
  s.m = {0.5, 0.5};
  s.v = {0.25, 0.25};
  adam_step(p, std::vector<double>{0.0, 0.0}, s);
  // Parameters move only through the stale moments; the moments shrink.
  EXPECT_LT(s.m[0], 0.5);
  EXPECT_LT(s.v[0], 0.25);
  std::vector<double> q{1.0};
  auto fresh = AdamState::for_parameters(1, 0.1);
  adam_step(q, std::vector<double>{0.0}, fresh);
  EXPECT_EQ(q[0], 1.0);
  EXPECT_EQ(fresh.step_count, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {0.3, -5.0, 100.0}) {
    std::vector<double> p{0.0};
    auto s = AdamState::for_parameters(1, 0.01);
    adam_step(p, std::vector<double>{g}, s);
    EXPECT_NEAR(std::abs(p[0]), 0.01, 0.01 * 0.01);
    EXPECT_LT(p[0] * g, 0.0);
  }
}

TEST(Adam, MinimizesQuadratic) {
  // Independent scalar Adam recurrence, written out in full.
  double theta = 1.0, m = 0.0, v = 0.0;
  std::vector<double> p{1.0};
  auto s = AdamState::for_parameters(1, 0.1);
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    theta -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    adam_step(p, std::vector<double>{2.0 * p[0]}, s);
  }
  EXPECT_LT(std::abs(p[0]), 0.1);
  EXPECT_NEAR(p[0], theta, 1e-12);
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> p{1.0, 2.0};
  auto s = AdamState::for_parameters(2, 0.1);
  EXPECT_THROW(adam_step(p, std::vector<double>{1.0}, s), ShapeError);
}
