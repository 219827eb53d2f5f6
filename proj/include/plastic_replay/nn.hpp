#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "plastic_replay/error.hpp"
#include "plastic_replay/rng.hpp"

namespace plastic_replay::nn {

enum class Activation { relu, identity };

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::identity;
  std::size_t weight_offset = 0;  // row-major out x in block in Mlp::params
  std::size_t bias_offset = 0;
};

/// Fully connected network whose parameters live in one flat vector, so the
/// optimizer and finite-difference checks see a single parameter space.
/// Hidden layers use `hidden`; the output layer is always identity.
class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::span<const std::size_t> sizes, Activation hidden = Activation::relu) {
    if (sizes.size() < 2) throw ShapeError("an MLP needs at least input and output sizes");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      if (sizes[l] == 0 || sizes[l + 1] == 0) throw ShapeError("layer sizes must be positive");
      Layer layer;
      layer.in = sizes[l];
      layer.out = sizes[l + 1];
      layer.activation = (l + 2 == sizes.size()) ? Activation::identity : hidden;
      layer.weight_offset = offset;
      offset += layer.in * layer.out;
      layer.bias_offset = offset;
      offset += layer.out;
      layers_.push_back(layer);
    }
    params_.assign(offset, 0.0);
  }
  Mlp(std::initializer_list<std::size_t> sizes, Activation hidden = Activation::relu)
      : Mlp(std::span<const std::size_t>(sizes.begin(), sizes.size()), hidden) {}

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  void init_uniform(Rng& rng) {
    for (const Layer& layer : layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t i = 0; i < layer.in * layer.out + layer.out; ++i)
        params_[layer.weight_offset + i] = dist(rng);
    }
  }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  double& weight(std::size_t l, std::size_t o, std::size_t i) {
    return params_[layers_[l].weight_offset + o * layers_[l].in + i];
  }
  double weight(std::size_t l, std::size_t o, std::size_t i) const {
    return params_[layers_[l].weight_offset + o * layers_[l].in + i];
  }
  double& bias(std::size_t l, std::size_t o) { return params_[layers_[l].bias_offset + o]; }
  double bias(std::size_t l, std::size_t o) const { return params_[layers_[l].bias_offset + o]; }

 private:
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

/// Per-layer inputs and pre-activations of one forward pass.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> preacts;
  std::vector<double> output;
};

inline double activate(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : z;
}
inline double activate_derivative(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

/// Fills `cache` (reusing its storage) and returns the output.
inline const std::vector<double>& forward(const Mlp& net, std::span<const double> x,
                                          ForwardCache& cache) {
  const auto& layers = net.layers();
  if (x.size() != net.input_dim())
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(net.input_dim()));
  cache.inputs.resize(layers.size());
  cache.preacts.resize(layers.size());
  cache.inputs[0].assign(x.begin(), x.end());
  const auto p = net.params();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const std::vector<double>& in = cache.inputs[l];
    std::vector<double>& z = cache.preacts[l];
    z.resize(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = p.data() + layer.weight_offset + o * layer.in;
      double acc = p[layer.bias_offset + o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * in[i];
      z[o] = acc;
    }
    std::vector<double>& next = (l + 1 < layers.size()) ? cache.inputs[l + 1] : cache.output;
    next.resize(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) next[o] = activate(layer.activation, z[o]);
  }
  return cache.output;
}

inline ForwardCache forward(const Mlp& net, std::span<const double> x) {
  ForwardCache cache;
  forward(net, x, cache);
  return cache;
}

/// Gradients summed over the samples of a batch.
///
/// param_grads mirrors Mlp::params. preact_grads[l][i] is the summed signed
/// gradient with respect to the pre-activation of neuron i in layer l, and
/// preact_abs[l][i] the summed magnitude of the same per-sample quantity.
struct GradientRecord {
  std::vector<double> param_grads;
  std::vector<std::vector<double>> preact_grads;
  std::vector<std::vector<double>> preact_abs;
  std::size_t batch_size = 0;

  static GradientRecord zeros_like(const Mlp& net) {
    GradientRecord r;
    r.param_grads.assign(net.parameter_count(), 0.0);
    for (const Layer& layer : net.layers()) {
      r.preact_grads.emplace_back(layer.out, 0.0);
      r.preact_abs.emplace_back(layer.out, 0.0);
    }
    return r;
  }
};

/// Adds the exact gradient of one sample's scalar loss, given dL/d(output),
/// to `record`. `delta` and `next_delta` are scratch.
inline void backward_accumulate(const Mlp& net, const ForwardCache& cache,
                                std::span<const double> loss_grad, GradientRecord& record,
                                std::vector<double>& delta, std::vector<double>& next_delta) {
  const auto& layers = net.layers();
  if (cache.preacts.size() != layers.size() || cache.inputs.size() != layers.size())
    throw ShapeError("forward cache does not match the network");
  if (loss_grad.size() != net.output_dim())
    throw ShapeError("loss gradient has dimension " + std::to_string(loss_grad.size()) +
                     ", network output is " + std::to_string(net.output_dim()));
  if (record.param_grads.size() != net.parameter_count())
    throw ShapeError("gradient record does not match the network");

  const auto p = net.params();
  delta.assign(loss_grad.begin(), loss_grad.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    const std::vector<double>& z = cache.preacts[l];
    const std::vector<double>& in = cache.inputs[l];
    if (z.size() != layer.out || in.size() != layer.in)
      throw ShapeError("forward cache does not match the network");
    for (std::size_t o = 0; o < layer.out; ++o) delta[o] *= activate_derivative(layer.activation, z[o]);
    for (std::size_t o = 0; o < layer.out; ++o) {
      record.preact_grads[l][o] += delta[o];
      record.preact_abs[l][o] += std::abs(delta[o]);
    }
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* gw = record.param_grads.data() + layer.weight_offset + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * in[i];
      record.param_grads[layer.bias_offset + o] += d;
    }
    if (l == 0) break;
    next_delta.assign(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = p.data() + layer.weight_offset + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) next_delta[i] += w[i] * d;
    }
    delta.swap(next_delta);
  }
  ++record.batch_size;
}

inline GradientRecord backward(const Mlp& net, const ForwardCache& cache,
                               std::span<const double> loss_grad) {
  GradientRecord record = GradientRecord::zeros_like(net);
  std::vector<double> a, b;
  backward_accumulate(net, cache, loss_grad, record, a, b);
  return record;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_parameters(std::size_t n, double lr) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.lr = lr;
    return s;
  }
};

/// Bias-corrected Adam update in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s) {
  if (params.size() != grads.size() || s.m.size() != params.size() || s.v.size() != params.size())
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  ++s.step_count;
  const double t = static_cast<double>(s.step_count);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    params[i] -= s.lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + s.eps);
  }
}

}  // namespace plastic_replay::nn
