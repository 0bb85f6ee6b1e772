/*
 * Copyright 2026 The repmeter Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dense multilayer perceptrons with hand-written reverse mode and Adam.
//
// Batches are row-major in the sense of the math: one sample per row, so a
// layer maps a [B x in] activation to [B x out] via  A W^T + 1 b^T.

#ifndef REPMETER_NN_HPP_
#define REPMETER_NN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "repmeter/common.hpp"
#include "repmeter/random.hpp"

namespace repmeter::nn {

enum class Activation { kRelu, kIdentity };

struct Layer {
  Matrix weight;  // [out x in]
  Vector bias;    // [out]
  Activation activation = Activation::kIdentity;

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }
};

struct Network {
  std::vector<Layer> layers;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  /// Dimensions compatible, parameters finite, final layer linear.
  bool valid() const {
    if (layers.empty() || layers.back().activation != Activation::kIdentity) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.out_dim() || !l.weight.allFinite() || !l.bias.allFinite()) return false;
      if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) return false;
    }
    return true;
  }
};

/// Network-shaped gradient container. `input` holds per-sample gradients with
/// respect to the batch inputs (not averaged), used for Jacobians.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;

  Gradients& operator+=(const Gradients& other) {
    require_arg(weight.size() == other.weight.size(), "gradient shapes differ");
    for (std::size_t i = 0; i < weight.size(); ++i) {
      weight[i] += other.weight[i];
      bias[i] += other.bias[i];
    }
    return *this;
  }

  bool all_finite() const {
    for (std::size_t i = 0; i < weight.size(); ++i)
      if (!weight[i].allFinite() || !bias[i].allFinite()) return false;
    return true;
  }
};

struct ForwardCache {
  // inputs[i] is the input to layer i; pre[i] its pre-activation.
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
};

/// Uniform Glorot init in +-sqrt(6 / (fan_in + fan_out)), zero biases, ReLU on
/// every hidden layer and identity on the output layer.
inline Network init_network(std::span<const Index> layer_sizes, std::uint64_t seed) {
  require_arg(layer_sizes.size() >= 2, "a network needs at least two layer sizes");
  for (Index s : layer_sizes) require_arg(s > 0, "layer sizes must be positive");
  CounterRng rng(seed);
  Network net;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const Index in = layer_sizes[i];
    const Index out = layer_sizes[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer;
    layer.weight.resize(out, in);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    layer.bias = Vector::Zero(out);
    layer.activation = (i + 2 == layer_sizes.size()) ? Activation::kIdentity : Activation::kRelu;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline Network init_network(std::initializer_list<Index> layer_sizes, std::uint64_t seed) {
  return init_network(std::span<const Index>(layer_sizes.begin(), layer_sizes.size()), seed);
}

/// Forward pass over a [B x d_in] batch; fills `cache` when given.
inline Matrix forward(const Network& net, const Eigen::Ref<const Matrix>& inputs,
                      ForwardCache* cache = nullptr) {
  require_arg(!net.layers.empty(), "empty network");
  require_arg(inputs.rows() >= 1, "batch must contain at least one row");
  require_arg(inputs.cols() == net.input_dim(),
              "batch width " + std::to_string(inputs.cols()) + " does not match network input " +
                  std::to_string(net.input_dim()));
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix a = inputs;
  for (const auto& layer : net.layers) {
    Matrix z = a * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    a = (layer.activation == Activation::kRelu) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return a;
}

/// Reverse pass. `output_gradient` holds dl_b/dy_b for each sample b; the
/// returned parameter gradients are of the batch mean (1/B) sum_b l_b.
inline Gradients backward(const Network& net, const ForwardCache& cache,
                          const Eigen::Ref<const Matrix>& output_gradient) {
  const std::size_t n_layers = net.layers.size();
  require_arg(cache.inputs.size() == n_layers && cache.pre.size() == n_layers,
              "cache does not come from this network");
  const Index batch = cache.inputs.front().rows();
  require_arg(output_gradient.rows() == batch && output_gradient.cols() == net.output_dim(),
              "output gradient shape does not match the forward batch");

  Gradients grads;
  grads.weight.resize(n_layers);
  grads.bias.resize(n_layers);
  const double inv_batch = 1.0 / static_cast<double>(batch);

  Matrix delta = output_gradient;
  for (std::size_t i = n_layers; i-- > 0;) {
    const Layer& layer = net.layers[i];
    if (layer.activation == Activation::kRelu)
      delta = delta.cwiseProduct((cache.pre[i].array() > 0.0).cast<double>().matrix());
    grads.weight[i] = inv_batch * (delta.transpose() * cache.inputs[i]);
    grads.bias[i] = inv_batch * delta.colwise().sum().transpose();
    delta = delta * layer.weight;
  }
  grads.input = std::move(delta);
  return grads;
}

struct AdamState {
  std::vector<Matrix> m_weight, v_weight;
  std::vector<Vector> m_bias, v_bias;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_network(const Network& net, double learning_rate) {
    require_arg(learning_rate > 0.0, "learning rate must be positive");
    AdamState s;
    s.learning_rate = learning_rate;
    for (const auto& l : net.layers) {
      s.m_weight.push_back(Matrix::Zero(l.out_dim(), l.in_dim()));
      s.v_weight.push_back(Matrix::Zero(l.out_dim(), l.in_dim()));
      s.m_bias.push_back(Vector::Zero(l.out_dim()));
      s.v_bias.push_back(Vector::Zero(l.out_dim()));
    }
    return s;
  }
};

namespace detail {

template <typename Param, typename Moment>
void adam_update(Param& param, const Param& grad, Moment& m, Moment& v, const AdamState& s,
                 double correction1, double correction2) {
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseAbs2();
  param.array() -= s.learning_rate * (m.array() / correction1) /
                   ((v.array() / correction2).sqrt() + s.epsilon);
}

}  // namespace detail

/// Bias-corrected Adam update, in place.
inline void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  const std::size_t n = net.layers.size();
  require_arg(grads.weight.size() == n && state.m_weight.size() == n, "Adam shapes do not match network");
  for (std::size_t i = 0; i < n; ++i) {
    require_arg(grads.weight[i].rows() == net.layers[i].out_dim() &&
                    grads.weight[i].cols() == net.layers[i].in_dim() &&
                    state.m_weight[i].rows() == net.layers[i].out_dim() &&
                    state.m_weight[i].cols() == net.layers[i].in_dim(),
                "Adam shapes do not match network");
  }
  require(grads.all_finite(), ErrorKind::kNumericFailure,
          "non-finite gradient at Adam step " + std::to_string(state.step + 1));
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    detail::adam_update(net.layers[i].weight, grads.weight[i], state.m_weight[i], state.v_weight[i], state, c1, c2);
    detail::adam_update(net.layers[i].bias, grads.bias[i], state.m_bias[i], state.v_bias[i], state, c1, c2);
  }
}

/// Flattened parameter access, used by gradient checks and serialization.
inline std::vector<double*> parameter_pointers(Network& net) {
  std::vector<double*> out;
  out.reserve(static_cast<std::size_t>(net.parameter_count()));
  for (auto& l : net.layers) {
    for (Index k = 0; k < l.weight.size(); ++k) out.push_back(l.weight.data() + k);
    for (Index k = 0; k < l.bias.size(); ++k) out.push_back(l.bias.data() + k);
  }
  return out;
}

inline std::vector<double> flatten(const Gradients& g) {
  std::vector<double> out;
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    out.insert(out.end(), g.weight[i].data(), g.weight[i].data() + g.weight[i].size());
    out.insert(out.end(), g.bias[i].data(), g.bias[i].data() + g.bias[i].size());
  }
  return out;
}

/// Largest relative disagreement between backward() and central differences
/// for the loss (1/B) sum_b 0.5 ||f(x_b) - t_b||^2. Denominators are floored
/// at `floor` so parameters with vanishing gradients compare absolutely.
struct GradientCheck {
  double max_relative_error = 0.0;
  Index parameters = 0;
};

inline GradientCheck gradient_check(Network net, const Eigen::Ref<const Matrix>& inputs,
                                    const Eigen::Ref<const Matrix>& targets, double step = 1e-5,
                                    double floor = 1e-6) {
  auto loss = [&](const Network& n) { return 0.5 * (forward(n, inputs) - targets).squaredNorm() / static_cast<double>(inputs.rows()); };
  ForwardCache cache;
  const Matrix y = forward(net, inputs, &cache);
  const std::vector<double> analytic = flatten(backward(net, cache, y - targets));
  auto params = parameter_pointers(net);
  GradientCheck out;
  out.parameters = static_cast<Index>(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = *params[i];
    *params[i] = orig + step;
    const double hi = loss(net);
    *params[i] = orig - step;
    const double lo = loss(net);
    *params[i] = orig;
    const double numeric = (hi - lo) / (2.0 * step);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(numeric - analytic[i]) / denom);
  }
  return out;
}

/// Per-coordinate standardization fitted on one matrix and applied to others.
/// Zero-variance columns keep unit scale.
struct Standardizer {
  RowVector mean;
  RowVector scale;

  static Standardizer fit(const Eigen::Ref<const Matrix>& x) {
    require_arg(x.rows() >= 2, "need at least two rows to standardize");
    Standardizer s;
    s.mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - s.mean;
    s.scale = (centered.cwiseAbs2().colwise().sum() / static_cast<double>(x.rows() - 1)).cwiseSqrt();
    for (Index j = 0; j < s.scale.size(); ++j)
      if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
    return s;
  }

  Matrix apply(const Eigen::Ref<const Matrix>& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

}  // namespace repmeter::nn

#endif  // REPMETER_NN_HPP_
