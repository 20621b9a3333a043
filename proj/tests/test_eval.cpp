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

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reid/eval.hpp"
#include "reid/metrics.hpp"
#include "test_util.hpp"

using namespace reid;

namespace {

// Random orthogonal-ish embeddings: identity direction plus camera-dependent noise.
struct Toy {
  RetrievalSet query, gallery;
};

Toy toy(std::mt19937_64& rng, int ids, int queries, int gallery, int cameras, double noise) {
  const Matrix centers = oracle::random_unit_rows(ids, 16, rng);
  std::uniform_int_distribution<int> id(0, ids - 1), cam(0, cameras - 1);
  std::normal_distribution<double> g(0.0, noise);
  auto fill = [&](RetrievalSet& s, int n) {
    s.embeddings.resize(n, 16);
    for (int i = 0; i < n; ++i) {
      const int k = id(rng);
      s.identities.push_back(k);
      s.cameras.push_back(cam(rng));
      for (int j = 0; j < 16; ++j) s.embeddings(i, j) = centers(k, j) + g(rng);
    }
    normalize_rows(s.embeddings);
  };
  Toy t;
  fill(t.query, queries);
  fill(t.gallery, gallery);
  return t;
}

}  // namespace

TEST(AveragePrecision, HandExamples) {
  EXPECT_EQ(average_precision({true, false, false, false, false}), 1.0);
  EXPECT_NEAR(average_precision({true, false, true, false}), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(average_precision({true, false, true, false}), 0.8333, 1e-4);
  EXPECT_EQ(average_precision({true, true, true, true}), 1.0);
  EXPECT_ERRC(average_precision({false, false}), Errc::NoRelevantItems);
}

TEST(Evaluate, CrossCameraClonesArePerfect) {
  std::mt19937_64 rng(1);
  RetrievalSet q{oracle::random_unit_rows(10, 8, rng), {}, {}};
  for (int i = 0; i < 10; ++i) {
    q.identities.push_back(i);
    q.cameras.push_back(0);
  }
  RetrievalSet g{q.embeddings, q.identities, std::vector<int>(10, 1)};
  const auto r = evaluate(q, g);
  EXPECT_EQ(r.mAP, 1.0);
  EXPECT_EQ(r.rank1(), 1.0);
  EXPECT_EQ(r.valid_queries, 10);
}

TEST(Evaluate, SameCameraMatchesAreJunk) {
  RetrievalSet q{Matrix::Identity(2, 3), {0, 1}, {0, 0}};
  Matrix ge(3, 3);
  ge << 1, 0, 0, 0, 1, 0, 0.6, 0.8, 0;
  // Query 0's only match shares its camera; query 1 finds its match on camera 1.
  RetrievalSet g{ge, {0, 1, 1}, {0, 0, 1}};
  const auto r = evaluate(q, g);
  EXPECT_EQ(r.excluded_queries, 1);
  EXPECT_EQ(r.valid_queries, 1);
  // Gallery 1 (same id and camera) is dropped, leaving gallery 2 first.
  EXPECT_EQ(r.mAP, 1.0);
}

TEST(Evaluate, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = toy(rng, 10, 10, 40, 3, trial % 2 ? 0.5 : 1.5);
    const auto want = oracle::retrieval(t.query.embeddings, t.query.identities, t.query.cameras,
                                        t.gallery.embeddings, t.gallery.identities, t.gallery.cameras);
    if (want.valid == 0) {
      EXPECT_ERRC(evaluate(t.query, t.gallery), Errc::EmptyEvaluation);
      continue;
    }
    const auto got = evaluate(t.query, t.gallery);
    EXPECT_EQ(got.valid_queries, want.valid);
    EXPECT_EQ(got.valid_queries + got.excluded_queries, 10);
    EXPECT_EQ(got.mAP, want.mAP);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(got.cmc[static_cast<std::size_t>(k)], want.cmc[k]);
  }
}

TEST(Evaluate, CmcIsMonotoneAndBoundsMap) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = toy(rng, 8, 20, 60, 4, 1.0);
    const auto r = evaluate(t.query, t.gallery);
    EXPECT_LE(r.rank1(), r.rank5());
    EXPECT_LE(r.rank5(), r.rank10());
    EXPECT_GE(r.mAP, 0.0);
    EXPECT_LE(r.mAP, 1.0);
  }
}

TEST(Evaluate, Errors) {
  RetrievalSet q{Matrix::Identity(1, 2), {0}, {0}};
  RetrievalSet g{Matrix::Identity(1, 2), {1}, {1}};
  EXPECT_ERRC(evaluate(q, g), Errc::EmptyEvaluation);
  RetrievalSet empty{Matrix(0, 2), {}, {}};
  EXPECT_ERRC(evaluate(empty, g), Errc::EmptyEvaluation);
  RetrievalSet bad{Matrix::Identity(1, 2), {0, 1}, {0}};
  EXPECT_ERRC(evaluate(bad, g), Errc::DimensionMismatch);
}

TEST(Diagnostics, SingleEpochSingleRow) {
  EpochReport r;
  r.cluster_count = 7;
  r.mean_kl = 0.25;
  const auto t = diagnostics({r});
  ASSERT_EQ(t.cluster_counts.size(), 1u);
  ASSERT_EQ(t.mean_kl.size(), 1u);
  EXPECT_EQ(t.cluster_counts[0].second, 7);
  EXPECT_EQ(t.mean_kl[0].second, 0.25);
}

TEST(Diagnostics, ConstantReportsGiveConstantCurves) {
  std::vector<EpochReport> reports(5);
  for (int e = 0; e < 5; ++e) {
    reports[static_cast<std::size_t>(e)].epoch = e;
    reports[static_cast<std::size_t>(e)].cluster_count = 12;
    reports[static_cast<std::size_t>(e)].mean_kl = 0.1;
  }
  const auto t = diagnostics(reports);
  for (int e = 0; e < 5; ++e) {
    EXPECT_EQ(t.cluster_counts[static_cast<std::size_t>(e)], std::make_pair(e, 12));
    EXPECT_EQ(t.mean_kl[static_cast<std::size_t>(e)], std::make_pair(e, 0.1));
  }
}

TEST(MetricsCsv, EvalColumnsBlankWithoutEvaluation) {
  EpochReport a;
  a.epoch = 0;
  EpochReport b = a;
  b.epoch = 1;
  b.eval = EvalReport{0.5, {0.25, 0.75, 1.0}, 4, 0};
  std::ostringstream os;
  write_metrics_csv(os, {a, b});
  std::istringstream is(os.str());
  std::string header, first, second;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, second);
  EXPECT_EQ(header, "epoch,n_clusters,n_outliers,L_agnostic,L_cross,L_h_ins,L_s_ins,L_total,mean_KL,mAP,rank1,rank5,rank10");
  EXPECT_EQ(first, "0,0,0,0,0,0,0,0,0,,,,");
  EXPECT_EQ(second, "1,0,0,0,0,0,0,0,0,0.5,0.25,0.75,1");
}
