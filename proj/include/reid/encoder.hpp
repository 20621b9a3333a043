// Copyright 2026 The reid-contrast Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REID_ENCODER_HPP
#define REID_ENCODER_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "reid/core_math.hpp"
#include "reid/error.hpp"
#include "reid/rng.hpp"

namespace reid {

enum class Activation { Tanh, Identity };

struct EncoderShape {
  int input = 64;
  int hidden = 128;
  int output = 32;

  friend bool operator==(const EncoderShape&, const EncoderShape&) = default;
};

/// Weights and biases of input -> hidden -> output, followed by row-wise L2
/// normalization. The same layout doubles as the gradient and optimizer
/// moment containers.
struct ParamSet {
  Matrix w1;  // hidden x input
  Vector b1;  // hidden
  Matrix w2;  // output x hidden
  Vector b2;  // output

  static ParamSet zeros(const EncoderShape& s) {
    return {Matrix::Zero(s.hidden, s.input), Vector::Zero(s.hidden),
            Matrix::Zero(s.output, s.hidden), Vector::Zero(s.output)};
  }

  EncoderShape shape() const {
    return {static_cast<int>(w1.cols()), static_cast<int>(w1.rows()), static_cast<int>(w2.rows())};
  }

  bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  std::size_t size() const {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.shape() == b.shape() && a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
  }
};

/// Calls fn(tensor_of_a, tensor_of_b, ...) for each of the four tensors, in a
/// fixed order (w1, b1, w2, b2).
template <class Fn, class... Sets>
void for_each_tensor(Fn&& fn, Sets&&... sets) {
  fn(sets.w1...);
  fn(sets.b1...);
  fn(sets.w2...);
  fn(sets.b2...);
}

using Gradients = ParamSet;

struct EncoderParams {
  ParamSet weights;
  Activation activation = Activation::Tanh;

  EncoderShape shape() const { return weights.shape(); }

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

/// Glorot-uniform weights, zero biases.
inline EncoderParams init_encoder(const EncoderShape& shape, std::uint64_t seed,
                                  Activation activation = Activation::Tanh) {
  require(shape.input >= 1 && shape.hidden >= 1 && shape.output >= 1, Errc::InvalidConfig,
          "encoder dimensions must be positive");
  Rng rng(seed);
  auto fill = [&rng](Matrix& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  };
  EncoderParams p{ParamSet::zeros(shape), activation};
  fill(p.weights.w1);
  fill(p.weights.w2);
  return p;
}

namespace detail {

struct ForwardCache {
  Matrix hidden;      // post-activation
  Matrix pre_norm;    // output before normalization
  Vector norms;       // row norms of pre_norm
  FeatureMatrix out;  // normalized output
};

inline ForwardCache forward_cached(const EncoderParams& params, const FeatureMatrix& batch) {
  const auto& w = params.weights;
  require(batch.cols() == w.w1.cols(), Errc::DimensionMismatch,
          "encoder expects " + std::to_string(w.w1.cols()) + " input columns, got " +
              std::to_string(batch.cols()));
  require(batch.allFinite(), Errc::NonFiniteInput, "encoder input contains non-finite values");

  ForwardCache c;
  c.hidden = batch * w.w1.transpose();
  c.hidden.rowwise() += w.b1.transpose();
  if (params.activation == Activation::Tanh) c.hidden = c.hidden.array().tanh().matrix();
  c.pre_norm = c.hidden * w.w2.transpose();
  c.pre_norm.rowwise() += w.b2.transpose();
  c.norms = c.pre_norm.rowwise().norm();
  for (Eigen::Index i = 0; i < c.norms.size(); ++i) {
    require(c.norms[i] > 0.0, Errc::DegenerateVector,
            "encoder output row " + std::to_string(i) + " is zero");
  }
  c.out = c.norms.cwiseInverse().asDiagonal() * c.pre_norm;
  return c;
}

}  // namespace detail

/// Encodes a batch (rows = samples) into unit-norm embeddings.
inline FeatureMatrix forward(const EncoderParams& params, const FeatureMatrix& batch) {
  return detail::forward_cached(params, batch).out;
}

/// Gradient of v / |v| back to v, row-wise: (g - y (y.g)) / |v|.
inline Matrix normalize_backward(const Matrix& normalized, const Vector& norms,
                                 const Matrix& output_gradient) {
  const Vector radial = (normalized.array() * output_gradient.array()).rowwise().sum();
  Matrix g = output_gradient - radial.asDiagonal() * normalized;
  return norms.cwiseInverse().asDiagonal() * g;
}

/// dLoss/dparams given dLoss/d(normalized output).
inline Gradients backward(const EncoderParams& params, const FeatureMatrix& batch,
                          const Matrix& output_gradient) {
  const auto c = detail::forward_cached(params, batch);
  require(output_gradient.rows() == c.out.rows() && output_gradient.cols() == c.out.cols(),
          Errc::DimensionMismatch, "output gradient shape does not match encoder output");

  const Matrix d_pre = normalize_backward(c.out, c.norms, output_gradient);
  Gradients g;
  g.w2 = d_pre.transpose() * c.hidden;
  g.b2 = d_pre.colwise().sum().transpose();
  Matrix d_hidden = d_pre * params.weights.w2;
  if (params.activation == Activation::Tanh) {
    d_hidden.array() *= 1.0 - c.hidden.array().square();
  }
  g.w1 = d_hidden.transpose() * batch;
  g.b1 = d_hidden.colwise().sum().transpose();
  return g;
}

/// Online encoder plus its exponential-moving-average twin.
struct EncoderPair {
  EncoderParams online;
  EncoderParams momentum;
  double alpha = 0.999;

  /// The momentum encoder starts as an exact copy of the online one.
  static EncoderPair from_online(EncoderParams online, double alpha) {
    EncoderPair p{online, online, alpha};
    return p;
  }

  friend bool operator==(const EncoderPair&, const EncoderPair&) = default;
};

/// theta_m <- alpha * theta_m + (1 - alpha) * theta_o
inline void ema_update(EncoderPair& pair) {
  const double a = pair.alpha;
  require(a >= 0.0 && a <= 1.0, Errc::InvalidMomentum,
          "momentum coefficient must lie in [0, 1], got " + std::to_string(a));
  require(pair.online.shape() == pair.momentum.shape(), Errc::DimensionMismatch,
          "online and momentum encoders differ in shape");
  for_each_tensor([a](auto& m, const auto& o) { m = a * m + (1.0 - a) * o; },
                  pair.momentum.weights, pair.online.weights);
}

struct OptimizerSettings {
  double base_lr = 0.00035;
  int warmup_epochs = 10;
  double weight_decay = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const OptimizerSettings&, const OptimizerSettings&) = default;
};

/// Adam with decoupled weight decay and a linear warmup.
struct OptimizerState {
  OptimizerSettings settings;
  ParamSet first_moment;
  ParamSet second_moment;
  std::int64_t step = 0;

  static OptimizerState for_shape(const EncoderShape& shape, OptimizerSettings settings) {
    return {settings, ParamSet::zeros(shape), ParamSet::zeros(shape), 0};
  }

  /// base_lr * min(1, (epoch + 1) / warmup_epochs); constant afterwards.
  double effective_lr(int epoch) const {
    if (settings.warmup_epochs <= 0) return settings.base_lr;
    const double ramp = static_cast<double>(epoch + 1) / settings.warmup_epochs;
    return settings.base_lr * std::min(1.0, ramp);
  }

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

inline void optimizer_step(OptimizerState& state, EncoderParams& params, const Gradients& grads,
                           int epoch) {
  require(epoch >= 0, Errc::InvalidConfig, "epoch must be non-negative");
  require(grads.all_finite(), Errc::NonFiniteGradient, "gradient contains non-finite values");
  require(grads.shape() == params.shape(), Errc::DimensionMismatch,
          "gradient shape does not match parameters");

  const auto& s = state.settings;
  const double lr = state.effective_lr(epoch);
  ++state.step;
  const double bias1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.step));

  for_each_tensor(
      [&](auto& p, const auto& g, auto& m, auto& v) {
        m = s.beta1 * m + (1.0 - s.beta1) * g;
        v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
        const auto m_hat = m.array() / bias1;
        const auto v_hat = v.array() / bias2;
        p.array() -= lr * (m_hat / (v_hat.sqrt() + s.epsilon) + s.weight_decay * p.array());
      },
      params.weights, grads, state.first_moment, state.second_moment);
}

}  // namespace reid

#endif  // REID_ENCODER_HPP
