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

#ifndef REID_PROXY_MEMORY_HPP
#define REID_PROXY_MEMORY_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reid/core_math.hpp"
#include "reid/error.hpp"
#include "reid/rerank_cluster.hpp"

namespace reid {

enum class MemoryMode { Agnostic, Aware };

struct ClusterProxy {
  int cluster_id = 0;
  UnitVector vector;
  int member_count = 0;
};

struct CameraProxy {
  int cluster_id = 0;
  int camera_id = 0;
  UnitVector vector;
  int member_count = 0;
};

/// Cluster centroids (and per-camera centroids in Aware mode) of the momentum
/// bank, frozen for one epoch.
class ProxyMemory {
 public:
  MemoryMode mode() const noexcept { return mode_; }
  int epoch() const noexcept { return epoch_; }

  const std::vector<ClusterProxy>& cluster_proxies() const noexcept { return clusters_; }
  const std::vector<CameraProxy>& camera_proxies() const noexcept { return cameras_; }

  /// Rows are cluster proxies indexed by cluster id.
  const Matrix& cluster_matrix() const noexcept { return cluster_matrix_; }
  /// Rows follow camera_proxies() order.
  const Matrix& camera_matrix() const noexcept { return camera_matrix_; }

  /// Indices into camera_proxies() belonging to a cluster.
  const std::vector<int>& camera_proxies_of(int cluster_id) const {
    require(cluster_id >= 0 && cluster_id < static_cast<int>(by_cluster_.size()),
            Errc::ProxyNotFound, "no proxy for cluster " + std::to_string(cluster_id));
    return by_cluster_[static_cast<std::size_t>(cluster_id)];
  }

  friend ProxyMemory build_proxies(const FeatureMatrix& bank, const ClusterAssignment& assignment,
                                   std::span<const int> cameras, MemoryMode mode, int epoch);

 private:
  MemoryMode mode_ = MemoryMode::Agnostic;
  int epoch_ = 0;
  std::vector<ClusterProxy> clusters_;
  std::vector<CameraProxy> cameras_;
  std::vector<std::vector<int>> by_cluster_;
  Matrix cluster_matrix_;
  Matrix camera_matrix_;
};

inline ProxyMemory build_proxies(const FeatureMatrix& bank, const ClusterAssignment& assignment,
                                 std::span<const int> cameras, MemoryMode mode, int epoch = 0) {
  const auto n = static_cast<std::size_t>(bank.rows());
  require(assignment.labels.size() == n, Errc::DimensionMismatch,
          "assignment and bank lengths differ");
  require(mode == MemoryMode::Agnostic || cameras.size() == n, Errc::DimensionMismatch,
          "camera ids and bank lengths differ");
  require(assignment.cluster_count > 0, Errc::NoClustersFound, "clustering produced no clusters");

  const auto k = static_cast<std::size_t>(assignment.cluster_count);
  const auto d = bank.cols();
  Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), d);
  std::vector<int> counts(k, 0);
  // (cluster, camera) -> running sum and count; std::map keeps a stable order.
  std::map<std::pair<int, int>, std::pair<Vector, int>> per_camera;

  for (std::size_t i = 0; i < n; ++i) {
    const int label = assignment.labels[i];
    if (ClusterAssignment::is_outlier(label)) continue;
    require(label >= 0 && static_cast<std::size_t>(label) < k, Errc::ProxyNotFound,
            "label " + std::to_string(label) + " outside cluster range");
    sums.row(label) += bank.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(label)];
    if (mode == MemoryMode::Aware) {
      auto [it, inserted] = per_camera.try_emplace({label, cameras[i]}, Vector::Zero(d), 0);
      it->second.first += bank.row(static_cast<Eigen::Index>(i)).transpose();
      ++it->second.second;
    }
  }

  ProxyMemory mem;
  mem.mode_ = mode;
  mem.epoch_ = epoch;
  mem.cluster_matrix_.resize(static_cast<Eigen::Index>(k), d);
  for (std::size_t a = 0; a < k; ++a) {
    require(counts[a] > 0, Errc::ProxyNotFound, "cluster " + std::to_string(a) + " has no members");
    Vector mean = sums.row(static_cast<Eigen::Index>(a)).transpose() / counts[a];
    auto v = l2_normalize(mean);
    mem.cluster_matrix_.row(static_cast<Eigen::Index>(a)) = v.values().transpose();
    mem.clusters_.push_back({static_cast<int>(a), std::move(v), counts[a]});
  }

  if (mode == MemoryMode::Aware) {
    mem.by_cluster_.assign(k, {});
    mem.camera_matrix_.resize(static_cast<Eigen::Index>(per_camera.size()), d);
    for (auto& [key, acc] : per_camera) {
      const auto idx = mem.cameras_.size();
      auto v = l2_normalize(acc.first / acc.second);
      mem.camera_matrix_.row(static_cast<Eigen::Index>(idx)) = v.values().transpose();
      mem.cameras_.push_back({key.first, key.second, std::move(v), acc.second});
      mem.by_cluster_[static_cast<std::size_t>(key.first)].push_back(static_cast<int>(idx));
    }
  } else {
    mem.by_cluster_.assign(k, {});
  }
  return mem;
}

/// The n_neg camera proxies of other clusters most similar to the anchor,
/// most similar first (ties by proxy index). Returns indices into
/// memory.camera_proxies().
inline std::vector<int> nearest_negative_proxies(const ProxyMemory& memory,
                                                 const Eigen::Ref<const Vector>& anchor,
                                                 int own_cluster, int n_neg) {
  require(memory.mode() == MemoryMode::Aware, Errc::ModeMismatch,
          "negative camera proxies need a camera-aware memory");
  require(n_neg >= 1, Errc::InvalidConfig, "n_neg must be positive");
  const Matrix& cams = memory.camera_matrix();
  require(anchor.size() == cams.cols(), Errc::DimensionMismatch, "anchor dimension mismatch");

  const Vector sims = cams * anchor;
  std::vector<int> candidates;
  const auto& proxies = memory.camera_proxies();
  for (std::size_t j = 0; j < proxies.size(); ++j) {
    if (proxies[j].cluster_id != own_cluster) candidates.push_back(static_cast<int>(j));
  }
  const auto keep = std::min(candidates.size(), static_cast<std::size_t>(n_neg));
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), [&](int a, int b) {
                      return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
                    });
  candidates.resize(keep);
  return candidates;
}

inline std::vector<int> nearest_negative_proxies(const ProxyMemory& memory, const UnitVector& anchor,
                                                 int own_cluster, int n_neg) {
  return nearest_negative_proxies(memory, anchor.values(), own_cluster, n_neg);
}

}  // namespace reid

#endif  // REID_PROXY_MEMORY_HPP
