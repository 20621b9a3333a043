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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reid/encoder.hpp"
#include "test_util.hpp"

using namespace reid;

namespace {

const EncoderShape kSmall{6, 5, 4};

}  // namespace

TEST(Encoder, ForwardMatchesScalarOracle) {
  std::mt19937_64 rng(1);
  for (auto act : {Activation::Tanh, Activation::Identity}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto p = init_encoder(kSmall, seed, act);
      p.weights.b1 = oracle::random_matrix(kSmall.hidden, 1, rng, 0.1);
      p.weights.b2 = oracle::random_matrix(kSmall.output, 1, rng, 0.1);
      const Matrix x = oracle::random_matrix(7, kSmall.input, rng);
      EXPECT_LT((forward(p, x) - oracle::forward(p, x)).cwiseAbs().maxCoeff(), 1e-13);
    }
  }
}

TEST(Encoder, OutputsAreUnitNorm) {
  std::mt19937_64 rng(2);
  const auto p = init_encoder({64, 128, 32}, 7);
  const Matrix y = forward(p, oracle::random_matrix(20, 64, rng));
  for (int i = 0; i < y.rows(); ++i) EXPECT_NEAR(y.row(i).norm(), 1.0, 1e-14);
}

TEST(Encoder, InitIsSeededGlorotWithZeroBias) {
  const auto a = init_encoder({64, 128, 32}, 42);
  const auto b = init_encoder({64, 128, 32}, 42);
  const auto c = init_encoder({64, 128, 32}, 43);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  EXPECT_TRUE(a.weights.b1.isZero());
  EXPECT_TRUE(a.weights.b2.isZero());
  EXPECT_LE(a.weights.w1.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (64 + 128)));
  EXPECT_LE(a.weights.w2.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (128 + 32)));
}

TEST(Encoder, RejectsBadInput) {
  const auto p = init_encoder(kSmall, 1);
  EXPECT_ERRC(forward(p, Matrix::Ones(2, 5)), Errc::DimensionMismatch);
  Matrix x = Matrix::Ones(2, 6);
  x(1, 1) = std::nan("");
  EXPECT_ERRC(forward(p, x), Errc::NonFiniteInput);
  EXPECT_ERRC(init_encoder({0, 3, 3}, 1), Errc::InvalidConfig);
}

TEST(Encoder, ZeroOutputIsDegenerate) {
  auto p = init_encoder(kSmall, 1);
  p.weights.w2.setZero();
  EXPECT_ERRC(forward(p, Matrix::Ones(1, 6)), Errc::DegenerateVector);
}

TEST(Encoder, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = init_encoder(kSmall, seed);
    const Matrix x = oracle::random_matrix(3, kSmall.input, rng);
    const Matrix upstream = oracle::random_matrix(3, kSmall.output, rng);
    const auto g = backward(p, x, upstream);
    auto loss_with = [&](auto member) {
      return [&, member](const Matrix& w) {
        auto q = p;
        member(q.weights) = w;
        return forward(q, x).cwiseProduct(upstream).sum();
      };
    };
    EXPECT_LT(oracle::relative_error(g.w1, oracle::numeric_gradient(loss_with([](ParamSet& s) -> Matrix& { return s.w1; }), p.weights.w1)), 1e-6);
    EXPECT_LT(oracle::relative_error(g.w2, oracle::numeric_gradient(loss_with([](ParamSet& s) -> Matrix& { return s.w2; }), p.weights.w2)), 1e-6);
    auto bias_loss = [&](bool first) {
      return [&, first](const Matrix& b) {
        auto q = p;
        (first ? q.weights.b1 : q.weights.b2) = b.col(0);
        return forward(q, x).cwiseProduct(upstream).sum();
      };
    };
    EXPECT_LT(oracle::relative_error(g.b1, oracle::numeric_gradient(bias_loss(true), Matrix(p.weights.b1))), 1e-6);
    EXPECT_LT(oracle::relative_error(g.b2, oracle::numeric_gradient(bias_loss(false), Matrix(p.weights.b2))), 1e-6);
  }
}

TEST(Ema, ClosedFormAfterThreeSteps) {
  auto online = init_encoder(kSmall, 1);
  auto pair = EncoderPair::from_online(init_encoder(kSmall, 2), 0.9);
  const auto start = pair.momentum;
  pair.online = online;
  for (int t = 0; t < 3; ++t) ema_update(pair);
  const double a3 = std::pow(0.9, 3);
  auto check = [&](const Matrix& m, const Matrix& m0, const Matrix& o) {
    EXPECT_LT((m - (a3 * m0 + (1.0 - a3) * o)).cwiseAbs().maxCoeff(), 1e-15);
  };
  check(pair.momentum.weights.w1, start.weights.w1, online.weights.w1);
  check(pair.momentum.weights.w2, start.weights.w2, online.weights.w2);
}

TEST(Ema, AlphaOneFreezesAndAlphaZeroCopies) {
  auto pair = EncoderPair::from_online(init_encoder(kSmall, 1), 1.0);
  const auto frozen = pair.momentum;
  pair.online = init_encoder(kSmall, 2);
  ema_update(pair);
  EXPECT_EQ(pair.momentum, frozen);
  pair.alpha = 0.0;
  ema_update(pair);
  EXPECT_EQ(pair.momentum, pair.online);
}

TEST(Ema, StaysOnSegmentBetweenMomentumAndOnline) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    auto pair = EncoderPair::from_online(init_encoder(kSmall, 2 * t), unit(rng));
    pair.online = init_encoder(kSmall, 2 * t + 1);
    const auto before = pair.momentum;
    ema_update(pair);
    for_each_tensor(
        [](const auto& now, const auto& prev, const auto& on) {
          const auto lo = prev.cwiseMin(on).array() - 1e-15;
          const auto hi = prev.cwiseMax(on).array() + 1e-15;
          EXPECT_TRUE((now.array() >= lo).all() && (now.array() <= hi).all());
        },
        pair.momentum.weights, before.weights, pair.online.weights);
  }
}

TEST(Ema, RejectsAlphaOutsideUnitInterval) {
  auto pair = EncoderPair::from_online(init_encoder(kSmall, 1), 1.5);
  EXPECT_ERRC(ema_update(pair), Errc::InvalidMomentum);
  pair.alpha = -0.1;
  EXPECT_ERRC(ema_update(pair), Errc::InvalidMomentum);
}

TEST(Optimizer, LinearWarmupThenConstant) {
  const auto s = OptimizerState::for_shape(kSmall, {});
  EXPECT_DOUBLE_EQ(s.effective_lr(0), 0.00035 / 10);
  EXPECT_DOUBLE_EQ(s.effective_lr(4), 0.00035 * 0.5);
  EXPECT_DOUBLE_EQ(s.effective_lr(9), 0.00035);
  EXPECT_DOUBLE_EQ(s.effective_lr(30), 0.00035);
}

TEST(Optimizer, FirstStepMatchesHandComputedAdamW) {
  auto params = init_encoder(kSmall, 3);
  const auto before = params;
  OptimizerSettings cfg;
  cfg.warmup_epochs = 0;
  auto state = OptimizerState::for_shape(kSmall, cfg);
  auto grads = Gradients::zeros(kSmall);
  grads.w1.setConstant(0.2);
  grads.w1(0, 0) = -3.0;
  optimizer_step(state, params, grads, 0);
  EXPECT_EQ(state.step, 1);
  // After bias correction the first update is g / (|g| + eps), plus decay.
  for (int i = 0; i < kSmall.hidden; ++i) {
    for (int j = 0; j < kSmall.input; ++j) {
      const double g = grads.w1(i, j), w = before.weights.w1(i, j);
      const double expect = w - cfg.base_lr * (g / (std::abs(g) + cfg.epsilon) + cfg.weight_decay * w);
      EXPECT_NEAR(params.weights.w1(i, j), expect, 1e-15);
    }
  }
  // Zero gradient: decay only.
  EXPECT_NEAR(params.weights.w2(1, 1), before.weights.w2(1, 1) * (1.0 - cfg.base_lr * cfg.weight_decay), 1e-18);
}

TEST(Optimizer, RejectsNonFiniteGradient) {
  auto params = init_encoder(kSmall, 3);
  auto state = OptimizerState::for_shape(kSmall, {});
  auto grads = Gradients::zeros(kSmall);
  grads.b2[0] = std::numeric_limits<double>::infinity();
  const auto before = params;
  EXPECT_ERRC(optimizer_step(state, params, grads, 0), Errc::NonFiniteGradient);
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.step, 0);
}
