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

#ifndef REID_EVAL_HPP
#define REID_EVAL_HPP

#include <algorithm>
#include <array>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "reid/core_math.hpp"
#include "reid/error.hpp"

namespace reid {

/// Unit-normalized embeddings with ground-truth identity and camera ids.
struct RetrievalSet {
  FeatureMatrix embeddings;
  std::vector<int> identities;
  std::vector<int> cameras;

  std::size_t size() const { return identities.size(); }

  void validate(const char* what) const {
    require(static_cast<std::size_t>(embeddings.rows()) == identities.size() &&
                identities.size() == cameras.size(),
            Errc::DimensionMismatch, std::string(what) + " columns differ in length");
  }
};

inline constexpr std::array<int, 3> kRanks = {1, 5, 10};

struct EvalReport {
  double mAP = 0.0;
  std::array<double, 3> cmc{};  // Rank-1, Rank-5, Rank-10
  int valid_queries = 0;
  int excluded_queries = 0;

  double rank1() const { return cmc[0]; }
  double rank5() const { return cmc[1]; }
  double rank10() const { return cmc[2]; }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// AP = (1/R) sum over hit positions r of (hits up to r) / r.
inline double average_precision(const std::vector<bool>& ranked_relevance) {
  int hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < ranked_relevance.size(); ++r) {
    if (!ranked_relevance[r]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  require(hits > 0, Errc::NoRelevantItems, "ranking has no relevant item");
  return sum / hits;
}

/// Gallery ranked by descending cosine, ties by ascending gallery index.
inline std::vector<int> rank_gallery(const Eigen::Ref<const Vector>& similarities) {
  std::vector<int> order(static_cast<std::size_t>(similarities.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return similarities[a] > similarities[b]; });
  return order;
}

/// Cross-camera retrieval protocol: gallery entries sharing both identity and
/// camera with the query are dropped; queries left without a true match are
/// excluded and counted.
inline EvalReport evaluate(const RetrievalSet& queries, const RetrievalSet& gallery) {
  queries.validate("query set");
  gallery.validate("gallery set");
  require(queries.size() > 0 && gallery.size() > 0, Errc::EmptyEvaluation, "empty query or gallery set");
  require(queries.embeddings.cols() == gallery.embeddings.cols(), Errc::DimensionMismatch,
          "query and gallery dimensions differ");

  const Matrix sims = queries.embeddings * gallery.embeddings.transpose();
  EvalReport report;
  double ap_sum = 0.0;
  std::array<int, 3> hits{};
  std::vector<bool> relevance;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const int qid = queries.identities[q];
    const int qcam = queries.cameras[q];
    relevance.clear();
    for (int g : rank_gallery(sims.row(static_cast<Eigen::Index>(q)).transpose())) {
      const auto gi = static_cast<std::size_t>(g);
      const bool same_id = gallery.identities[gi] == qid;
      if (same_id && gallery.cameras[gi] == qcam) continue;
      relevance.push_back(same_id);
    }
    const auto first = std::find(relevance.begin(), relevance.end(), true);
    if (first == relevance.end()) {
      ++report.excluded_queries;
      continue;
    }
    ++report.valid_queries;
    ap_sum += average_precision(relevance);
    const auto pos = std::distance(relevance.begin(), first);
    for (std::size_t k = 0; k < kRanks.size(); ++k) {
      if (pos < kRanks[k]) ++hits[k];
    }
  }
  require(report.valid_queries > 0, Errc::EmptyEvaluation, "no query has a cross-camera match");
  const double n = report.valid_queries;
  report.mAP = ap_sum / n;
  for (std::size_t k = 0; k < kRanks.size(); ++k) report.cmc[k] = hits[k] / n;
  return report;
}

}  // namespace reid

#endif  // REID_EVAL_HPP
