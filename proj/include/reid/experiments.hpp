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

#ifndef REID_EXPERIMENTS_HPP
#define REID_EXPERIMENTS_HPP

#include <algorithm>
#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reid/dataset.hpp"
#include "reid/rerank_cluster.hpp"
#include "reid/trainer.hpp"

namespace reid {

/// Median; the mean of the two central values for even counts.
inline double median(std::vector<double> v) {
  require(!v.empty(), Errc::InvalidConfig, "median of an empty set");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

struct BenchmarkRun {
  std::uint64_t seed = 0;
  std::vector<EpochReport> reports;

  const EpochReport& last() const { return reports.back(); }
  double final_map() const { return last().eval ? last().eval->mAP : 0.0; }
};

/// One training run on the synthetic benchmark; the data and the trainer share the seed.
inline BenchmarkRun run_benchmark(const TrainConfig& config, const SyntheticSpec& spec, std::uint64_t seed) {
  SyntheticSpec s = spec;
  s.seed = seed;
  TrainConfig c = config;
  c.seed = seed;
  const auto data = generate_synthetic(s);
  auto result = train(c, data.train, {&data.query, &data.gallery});
  return {seed, std::move(result.reports)};
}

struct SeedSummary {
  std::vector<BenchmarkRun> runs;
  double median_map = 0.0;
  double median_clusters = 0.0;
  double median_kl = 0.0;
};

inline SeedSummary summarize(std::vector<BenchmarkRun> runs) {
  SeedSummary s;
  std::vector<double> maps, clusters, kls;
  for (const auto& r : runs) {
    maps.push_back(r.final_map());
    clusters.push_back(r.last().cluster_count);
    kls.push_back(r.last().mean_kl);
  }
  s.median_map = median(maps);
  s.median_clusters = median(clusters);
  s.median_kl = median(kls);
  s.runs = std::move(runs);
  return s;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

inline SeedSummary run_seeds(const TrainConfig& config, const SyntheticSpec& spec,
                             std::span<const std::uint64_t> seeds) {
  std::vector<BenchmarkRun> runs;
  for (auto seed : seeds) runs.push_back(run_benchmark(config, spec, seed));
  return summarize(std::move(runs));
}

enum class LossVariant { Baseline, Hard, Soft, Full };

inline constexpr std::array kLossVariants{LossVariant::Baseline, LossVariant::Hard, LossVariant::Soft,
                                          LossVariant::Full};

inline std::string variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::Baseline: return "baseline";
    case LossVariant::Hard: return "+hard";
    case LossVariant::Soft: return "+soft";
    case LossVariant::Full: return "+both";
  }
  return "?";
}

/// Zeroes the weights a variant leaves out; the others keep their configured value.
inline TrainConfig apply_variant(TrainConfig config, LossVariant v, MemoryMode mode) {
  config.memory = mode;
  if (v == LossVariant::Baseline || v == LossVariant::Soft) config.weights.hard = 0.0;
  if (v == LossVariant::Baseline || v == LossVariant::Hard) config.weights.soft = 0.0;
  return config;
}

struct AblationRow {
  MemoryMode memory = MemoryMode::Aware;
  LossVariant variant = LossVariant::Baseline;
  SeedSummary summary;
};

/// Loss variants crossed with both memory modes, eight rows.
inline std::vector<AblationRow> run_ablation(const TrainConfig& config, const SyntheticSpec& spec,
                                             std::span<const std::uint64_t> seeds,
                                             const std::function<void(const AblationRow&)>& on_row = {}) {
  std::vector<AblationRow> rows;
  for (auto mode : {MemoryMode::Agnostic, MemoryMode::Aware}) {
    for (auto v : kLossVariants) {
      AblationRow row{mode, v, run_seeds(apply_variant(config, v, mode), spec, seeds)};
      if (on_row) on_row(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline constexpr std::array kEpsGrid{0.45, 0.5, 0.55, 0.6};

struct EpsRow {
  double eps = 0.0;
  int cluster_count = 0;
  std::size_t outlier_count = 0;
};

/// Clusters one bank at several eps values; the Jaccard matrix is computed once.
inline std::vector<EpsRow> sweep_eps(const FeatureMatrix& bank, ClusterConfig config,
                                     std::span<const double> grid = kEpsGrid) {
  const auto dist = jaccard_distance_matrix(bank, config.k1, config.k2);
  std::vector<EpsRow> rows;
  for (double eps : grid) {
    config.eps = eps;
    const auto a = dbscan(dist, config);
    rows.push_back({eps, a.cluster_count, a.outlier_count()});
  }
  return rows;
}

}  // namespace reid

#endif  // REID_EXPERIMENTS_HPP
