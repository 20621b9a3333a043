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

#ifndef REID_RERANK_CLUSTER_HPP
#define REID_RERANK_CLUSTER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include "reid/core_math.hpp"
#include "reid/error.hpp"

namespace reid {

struct ClusterConfig {
  int k1 = 30;
  int k2 = 6;
  double eps = 0.55;
  int min_samples = 4;

  void validate() const {
    require(k2 >= 1 && k1 >= k2, Errc::InvalidConfig, "need k1 >= k2 >= 1");
    require(eps > 0.0 && eps < 1.0, Errc::InvalidConfig, "need 0 < eps < 1");
    require(min_samples >= 1, Errc::InvalidConfig, "need min_samples >= 1");
  }

  friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

inline constexpr int kOutlier = -1;

/// Pseudo labels: ids 0..cluster_count-1 for inliers, kOutlier otherwise.
struct ClusterAssignment {
  std::vector<int> labels;
  int cluster_count = 0;

  static bool is_outlier(int label) { return label == kOutlier; }

  std::size_t outlier_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kOutlier));
  }

  /// Member indices of every cluster, in ascending index order.
  std::vector<std::vector<int>> members() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(cluster_count));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!is_outlier(labels[i])) out[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
    }
    return out;
  }
};

namespace detail {

/// Row-wise ranking of all samples by ascending distance, ties by index.
inline std::vector<std::vector<int>> rank_neighbors(const DistanceMatrix& dist) {
  const auto n = static_cast<int>(dist.rows());
  std::vector<std::vector<int>> ranking(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& r = ranking[static_cast<std::size_t>(i)];
    r.resize(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 0);
    std::stable_sort(r.begin(), r.end(), [&](int a, int b) { return dist(i, a) < dist(i, b); });
  }
  return ranking;
}

/// k-reciprocal neighbors of p; the neighbor list of a sample is the first
/// k + 1 entries of its ranking (itself included). Returned sorted.
inline std::vector<int> reciprocal_neighbors(const std::vector<std::vector<int>>& ranking, int p,
                                             int k) {
  const auto& forward = ranking[static_cast<std::size_t>(p)];
  const auto width = static_cast<std::ptrdiff_t>(k) + 1;
  std::vector<int> out;
  for (auto it = forward.begin(); it != forward.begin() + width; ++it) {
    const auto& backward = ranking[static_cast<std::size_t>(*it)];
    if (std::find(backward.begin(), backward.begin() + width, p) != backward.begin() + width) {
      out.push_back(*it);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// k-reciprocal encoded Jaccard distance over unit-normalized features.
///
/// The base distance is 1 - cosine. Each sample's k1-reciprocal set is grown
/// with the k1/2-reciprocal sets of its members when at least two thirds of
/// such a candidate set already lies inside it. The expanded set is encoded
/// as weights exp(-distance), averaged over the k2 nearest neighbors (local
/// query expansion), and compared with a min/max Jaccard ratio.
inline DistanceMatrix jaccard_distance_matrix(const FeatureMatrix& features, int k1, int k2) {
  const auto n = static_cast<int>(features.rows());
  require(n >= 2, Errc::InsufficientSamples, "need at least two samples");
  require(k1 >= 1 && k2 >= 1, Errc::InvalidConfig, "k1 and k2 must be positive");
  require(k1 < n && k2 < n, Errc::InsufficientSamples,
          "k1=" + std::to_string(k1) + ", k2=" + std::to_string(k2) + " need more than " +
              std::to_string(n) + " samples");

  const DistanceMatrix original =
      (1.0 - pairwise_similarity(features, features).array()).max(0.0).matrix();
  const auto ranking = detail::rank_neighbors(original);
  const int half = k1 / 2;

  std::vector<std::vector<int>> reciprocal(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> reciprocal_half(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    reciprocal[static_cast<std::size_t>(p)] = detail::reciprocal_neighbors(ranking, p, k1);
    reciprocal_half[static_cast<std::size_t>(p)] = detail::reciprocal_neighbors(ranking, p, half);
  }

  // Sparse encodings before query expansion.
  Matrix encoded = Matrix::Zero(n, n);
  std::vector<int> expanded;
  std::vector<int> overlap;
  for (int p = 0; p < n; ++p) {
    const auto& base = reciprocal[static_cast<std::size_t>(p)];
    expanded = base;
    for (int q : base) {
      const auto& cand = reciprocal_half[static_cast<std::size_t>(q)];
      overlap.clear();
      std::set_intersection(cand.begin(), cand.end(), base.begin(), base.end(),
                            std::back_inserter(overlap));
      if (3 * overlap.size() >= 2 * cand.size()) {
        expanded.insert(expanded.end(), cand.begin(), cand.end());
      }
    }
    std::sort(expanded.begin(), expanded.end());
    expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());
    for (int q : expanded) encoded(p, q) = std::exp(-original(p, q));
  }

  Matrix expanded_enc = Matrix::Zero(n, n);
  for (int p = 0; p < n; ++p) {
    const auto& r = ranking[static_cast<std::size_t>(p)];
    for (int j = 0; j < k2; ++j) expanded_enc.row(p) += encoded.row(r[static_cast<std::size_t>(j)]);
    expanded_enc.row(p) /= static_cast<double>(k2);
  }

  // Inverted index: sum of min only over shared support; sum of max follows
  // from min + max = a + b.
  std::vector<std::vector<int>> postings(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (expanded_enc(p, q) != 0.0) postings[static_cast<std::size_t>(q)].push_back(p);
    }
  }
  const Vector mass = expanded_enc.rowwise().sum();

  DistanceMatrix jaccard(n, n);
  std::vector<double> min_sum(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::fill(min_sum.begin(), min_sum.end(), 0.0);
    for (int q = 0; q < n; ++q) {
      const double vi = expanded_enc(i, q);
      if (vi == 0.0) continue;
      for (int j : postings[static_cast<std::size_t>(q)]) {
        min_sum[static_cast<std::size_t>(j)] += std::min(vi, expanded_enc(j, q));
      }
    }
    for (int j = 0; j < n; ++j) {
      const double mn = min_sum[static_cast<std::size_t>(j)];
      const double mx = mass[i] + mass[j] - mn;
      jaccard(i, j) = mx > 0.0 ? std::clamp(1.0 - mn / mx, 0.0, 1.0) : 1.0;
    }
  }
  // Floating-point summation order differs between (i, j) and (j, i).
  jaccard = (0.5 * (jaccard + jaccard.transpose())).eval();
  jaccard.diagonal().setZero();
  return jaccard;
}

/// DBSCAN over a precomputed distance matrix. A point is core when at least
/// min_samples points (itself included) lie within eps. Points are visited in
/// index order and a border point joins the first cluster that reaches it.
inline ClusterAssignment dbscan(const DistanceMatrix& dist, const ClusterConfig& config) {
  config.validate();
  const auto n = static_cast<int>(dist.rows());
  require(dist.cols() == dist.rows(), Errc::InvalidDistanceMatrix, "distance matrix not square");
  for (int i = 0; i < n; ++i) {
    require(dist(i, i) == 0.0, Errc::InvalidDistanceMatrix, "nonzero diagonal");
    for (int j = i + 1; j < n; ++j) {
      require(std::abs(dist(i, j) - dist(j, i)) <= 1e-12, Errc::InvalidDistanceMatrix,
              "asymmetric entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }

  std::vector<std::vector<int>> neighborhoods(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (dist(i, j) <= config.eps) neighborhoods[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  auto is_core = [&](int i) {
    return static_cast<int>(neighborhoods[static_cast<std::size_t>(i)].size()) >= config.min_samples;
  };

  ClusterAssignment out{std::vector<int>(static_cast<std::size_t>(n), kOutlier), 0};
  std::deque<int> frontier;
  for (int seed = 0; seed < n; ++seed) {
    if (out.labels[static_cast<std::size_t>(seed)] != kOutlier || !is_core(seed)) continue;
    const int id = out.cluster_count++;
    out.labels[static_cast<std::size_t>(seed)] = id;
    frontier.assign(1, seed);
    while (!frontier.empty()) {
      const int p = frontier.front();
      frontier.pop_front();
      if (!is_core(p)) continue;
      for (int q : neighborhoods[static_cast<std::size_t>(p)]) {
        auto& label = out.labels[static_cast<std::size_t>(q)];
        if (label != kOutlier) continue;
        label = id;
        frontier.push_back(q);
      }
    }
  }
  return out;
}

struct PseudoLabelResult {
  ClusterAssignment assignment;
  DistanceMatrix distances;  // empty when clustering was short-circuited
};

/// Re-ranked distances followed by DBSCAN over the momentum bank.
inline PseudoLabelResult generate_pseudo_labels(const FeatureMatrix& bank, const ClusterConfig& config) {
  config.validate();
  const auto n = static_cast<int>(bank.rows());
  if (n < config.min_samples || n < 2) {
    return {{std::vector<int>(static_cast<std::size_t>(n), kOutlier), 0}, DistanceMatrix()};
  }
  PseudoLabelResult r;
  r.distances = jaccard_distance_matrix(bank, config.k1, config.k2);
  r.assignment = dbscan(r.distances, config);
  return r;
}

}  // namespace reid

#endif  // REID_RERANK_CLUSTER_HPP
