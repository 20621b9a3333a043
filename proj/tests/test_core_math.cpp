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
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reid/core_math.hpp"
#include "reid/rng.hpp"
#include "test_util.hpp"

using namespace reid;

TEST(L2Normalize, ProducesUnitNorm) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Vector v = oracle::random_matrix(1, 17, rng).row(0).transpose() * std::pow(10.0, t % 7 - 3);
    const auto u = l2_normalize(v);
    EXPECT_NEAR(u.values().norm(), 1.0, 1e-14);
    EXPECT_NEAR(u.values().dot(v), v.norm(), 1e-12 * v.norm());
  }
}

TEST(L2Normalize, ThreeFourFive) {
  Vector v(2);
  v << 3.0, 4.0;
  const auto u = l2_normalize(v);
  EXPECT_DOUBLE_EQ(u[0], 0.6);
  EXPECT_DOUBLE_EQ(u[1], 0.8);
}

TEST(L2Normalize, RejectsZeroAndNonFinite) {
  EXPECT_ERRC(l2_normalize(Vector::Zero(4)), Errc::DegenerateVector);
  Vector v = Vector::Ones(3);
  v[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_ERRC(l2_normalize(v), Errc::NonFiniteInput);
  v[1] = std::numeric_limits<double>::infinity();
  EXPECT_ERRC(l2_normalize(v), Errc::NonFiniteInput);
}

TEST(Cosine, SelfIsOneAndOppositeIsMinusOne) {
  Vector v(3);
  v << 1.0, -2.0, 0.5;
  const auto u = l2_normalize(v);
  EXPECT_NEAR(cosine(u, u), 1.0, 1e-15);
  EXPECT_NEAR(cosine(u, l2_normalize(-v)), -1.0, 1e-15);
}

TEST(Cosine, OrthogonalIsZero) {
  Vector a = Vector::Zero(3), b = Vector::Zero(3);
  a[0] = 2.0;
  b[2] = -5.0;
  EXPECT_EQ(cosine(l2_normalize(a), l2_normalize(b)), 0.0);
}

TEST(Cosine, DimensionMismatch) {
  EXPECT_ERRC(cosine(l2_normalize(Vector::Ones(3)), l2_normalize(Vector::Ones(4))), Errc::DimensionMismatch);
}

TEST(Cosine, BoundedAndSymmetric) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    const Matrix m = oracle::random_matrix(2, 8, rng);
    const auto a = l2_normalize(m.row(0).transpose());
    const auto b = l2_normalize(m.row(1).transpose());
    EXPECT_LE(std::abs(cosine(a, b)), 1.0 + 1e-15);
    EXPECT_EQ(cosine(a, b), cosine(b, a));
  }
}

TEST(NormalizeRows, EveryRowUnit) {
  std::mt19937_64 rng(5);
  const Matrix m = normalized_rows(oracle::random_matrix(6, 9, rng));
  for (int i = 0; i < m.rows(); ++i) EXPECT_NEAR(m.row(i).norm(), 1.0, 1e-14);
  Matrix z = Matrix::Ones(3, 2);
  z.row(1).setZero();
  EXPECT_ERRC(normalize_rows(z), Errc::DegenerateVector);
}

TEST(PairwiseSimilarity, MatchesLoopDot) {
  std::mt19937_64 rng(9);
  const Matrix a = oracle::random_unit_rows(5, 7, rng);
  const Matrix b = oracle::random_unit_rows(4, 7, rng);
  const Matrix s = pairwise_similarity(a, b);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(s(i, j), oracle::dot(a, i, b, j), 1e-14);
  EXPECT_ERRC(pairwise_similarity(a, Matrix::Ones(2, 3)), Errc::DimensionMismatch);
}

TEST(SoftmaxRow, SumsToOneAndMatchesDefinition) {
  std::mt19937_64 rng(13);
  for (double tau : {0.05, 0.07, 0.5, 1.0, 3.0}) {
    const Vector s = oracle::random_matrix(1, 12, rng).row(0).transpose();
    const Vector p = softmax_row(s, tau);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    double z = 0.0;
    for (int j = 0; j < s.size(); ++j) z += std::exp(s[j] / tau);
    for (int j = 0; j < s.size(); ++j) EXPECT_NEAR(p[j], std::exp(s[j] / tau) / z, 1e-12);
  }
}

TEST(SoftmaxRow, StableForLargeLogits) {
  Vector s(3);
  s << 1000.0, 999.0, -1000.0;
  const Vector p = softmax_row(s, 0.01);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p[0], 1.0, 1e-12);
}

TEST(SoftmaxRow, RejectsBadTemperature) {
  EXPECT_ERRC(softmax_row(Vector::Ones(3), 0.0), Errc::InvalidTemperature);
  EXPECT_ERRC(softmax_row(Vector::Ones(3), -1.0), Errc::InvalidTemperature);
}

TEST(LogSumExp, MatchesNaiveAndSurvivesOverflow) {
  Vector s(4);
  s << 0.1, -2.0, 3.0, 1.5;
  double naive = 0.0;
  for (int i = 0; i < 4; ++i) naive += std::exp(s[i]);
  EXPECT_NEAR(log_sum_exp(s), std::log(naive), 1e-14);
  EXPECT_NEAR(log_sum_exp((s.array() + 800.0).matrix()), std::log(naive) + 800.0, 1e-10);
}

TEST(DeriveSeed, DistinctStreamsAndStable) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {0}), derive_seed(2, {0}));
  EXPECT_NE(derive_seed(1, {}), derive_seed(1, {0}));
}
