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

#ifndef REID_SAMPLER_HPP
#define REID_SAMPLER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "reid/core_math.hpp"
#include "reid/error.hpp"
#include "reid/rerank_cluster.hpp"
#include "reid/rng.hpp"

namespace reid {

struct BatchSpec {
  int identities = 8;  // N_P
  int instances = 4;   // N_K

  void validate() const {
    require(identities >= 2 && instances >= 2, Errc::InvalidConfig,
            "PK batches need at least 2 identities and 2 instances each");
  }
  int size() const { return identities * instances; }

  friend bool operator==(const BatchSpec&, const BatchSpec&) = default;
};

/// N_P groups of N_K consecutive entries sharing a pseudo label.
struct IdentityBatch {
  std::vector<int> indices;
  std::vector<int> labels;
  std::vector<int> cameras;
};

/// Draws N_P distinct clusters, then N_K members of each. Clusters smaller than
/// N_K contribute every member once, topped up by draws with replacement.
inline IdentityBatch sample_pk_batch(const ClusterAssignment& assignment, const BatchSpec& spec,
                                     std::uint64_t seed, std::span<const int> cameras = {}) {
  spec.validate();
  require(cameras.empty() || cameras.size() == assignment.labels.size(), Errc::DimensionMismatch,
          "camera ids and labels differ in length");
  require(assignment.cluster_count >= spec.identities, Errc::InsufficientClusters,
          std::to_string(assignment.cluster_count) + " clusters, batch needs " +
              std::to_string(spec.identities));

  Rng rng(seed);
  const auto members = assignment.members();
  std::vector<int> order(members.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  IdentityBatch batch;
  batch.indices.reserve(static_cast<std::size_t>(spec.size()));
  for (int p = 0; p < spec.identities; ++p) {
    const int label = order[static_cast<std::size_t>(p)];
    auto pool = members[static_cast<std::size_t>(label)];
    const auto k = static_cast<std::size_t>(spec.instances);
    if (pool.size() >= k) {
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      pool.resize(k);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      while (pool.size() < k) pool.push_back(pool[pick(rng)]);
      std::shuffle(pool.begin(), pool.end(), rng);
    }
    for (int idx : pool) {
      batch.indices.push_back(idx);
      batch.labels.push_back(label);
      batch.cameras.push_back(cameras.empty() ? 0 : cameras[static_cast<std::size_t>(idx)]);
    }
  }
  return batch;
}

struct PerturbationConfig {
  double noise = 0.1;           // expected L2 norm of the added Gaussian noise
  double dropout = 0.15;        // fraction of coordinates zeroed per row
  double restyle_prob = 0.0;    // chance of swapping in another camera's style

  void validate() const {
    require(noise >= 0.0, Errc::InvalidConfig, "noise must be non-negative");
    require(dropout >= 0.0 && dropout < 1.0, Errc::InvalidConfig, "dropout must lie in [0, 1)");
    require(restyle_prob >= 0.0 && restyle_prob <= 1.0, Errc::InvalidConfig,
            "restyle probability must lie in [0, 1]");
  }

  friend bool operator==(const PerturbationConfig&, const PerturbationConfig&) = default;
};

/// Per-camera mean offsets from the global mean of the raw features. The
/// feature-space analog of a camera's photometric style.
struct CameraStyle {
  Matrix offsets;  // cameras x d

  static CameraStyle estimate(const FeatureMatrix& features, std::span<const int> cameras) {
    require(cameras.size() == static_cast<std::size_t>(features.rows()), Errc::DimensionMismatch,
            "camera ids and features differ in length");
    if (features.rows() == 0) return {};
    const int count = *std::max_element(cameras.begin(), cameras.end()) + 1;
    Matrix sums = Matrix::Zero(count, features.cols());
    std::vector<int> n(static_cast<std::size_t>(count), 0);
    for (std::size_t i = 0; i < cameras.size(); ++i) {
      sums.row(cameras[i]) += features.row(static_cast<Eigen::Index>(i));
      ++n[static_cast<std::size_t>(cameras[i])];
    }
    const Vector global = features.colwise().mean().transpose();
    CameraStyle s{Matrix::Zero(count, features.cols())};
    for (int c = 0; c < count; ++c) {
      if (n[static_cast<std::size_t>(c)] == 0) continue;
      s.offsets.row(c) = sums.row(c) / n[static_cast<std::size_t>(c)] - global.transpose();
    }
    return s;
  }

  int camera_count() const { return static_cast<int>(offsets.rows()); }
};

/// Feature-space strong augmentation: optional camera restyle, additive
/// isotropic noise, then exact-count coordinate dropout. Not renormalized.
inline FeatureMatrix perturb(const FeatureMatrix& features, const PerturbationConfig& config,
                             std::uint64_t seed, std::span<const int> cameras = {},
                             const CameraStyle& style = {}) {
  config.validate();
  const auto d = features.cols();
  FeatureMatrix out = features;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double coord_sigma = d > 0 ? config.noise / std::sqrt(static_cast<double>(d)) : 0.0;
  const auto drop = static_cast<Eigen::Index>(std::llround(config.dropout * static_cast<double>(d)));
  const bool can_restyle = style.camera_count() >= 2 && !cameras.empty();
  require(cameras.empty() || cameras.size() == static_cast<std::size_t>(features.rows()),
          Errc::DimensionMismatch, "camera ids and features differ in length");

  std::vector<Eigen::Index> coords(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    if (config.restyle_prob > 0.0 && can_restyle && unit(rng) < config.restyle_prob) {
      const int own = cameras[static_cast<std::size_t>(i)];
      std::uniform_int_distribution<int> pick(0, style.camera_count() - 2);
      int other = pick(rng);
      if (other >= own) ++other;
      row += style.offsets.row(other) - style.offsets.row(own);
    }
    if (config.noise > 0.0) {
      for (Eigen::Index j = 0; j < d; ++j) row[j] += coord_sigma * gauss(rng);
    }
    if (drop > 0) {
      std::iota(coords.begin(), coords.end(), Eigen::Index{0});
      for (Eigen::Index j = 0; j < drop; ++j) {
        std::uniform_int_distribution<Eigen::Index> pick(j, d - 1);
        std::swap(coords[static_cast<std::size_t>(j)], coords[static_cast<std::size_t>(pick(rng))]);
        row[coords[static_cast<std::size_t>(j)]] = 0.0;
      }
    }
  }
  return out;
}

}  // namespace reid

#endif  // REID_SAMPLER_HPP
