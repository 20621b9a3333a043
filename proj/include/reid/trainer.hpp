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

#ifndef REID_TRAINER_HPP
#define REID_TRAINER_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reid/core_math.hpp"
#include "reid/dataset.hpp"
#include "reid/encoder.hpp"
#include "reid/error.hpp"
#include "reid/eval.hpp"
#include "reid/losses.hpp"
#include "reid/proxy_memory.hpp"
#include "reid/rerank_cluster.hpp"
#include "reid/rng.hpp"
#include "reid/sampler.hpp"

namespace reid {

enum class LabelSource { Pseudo, Oracle };

struct TrainConfig {
  int epochs = 20;
  int iterations = 50;
  BatchSpec batch;
  Temperatures temperatures;
  LossWeights weights;
  ClusterConfig cluster;
  PerturbationConfig perturbation;
  double alpha = 0.99;
  OptimizerSettings optimizer;
  int hidden = 128;
  int output = 32;
  MemoryMode memory = MemoryMode::Aware;
  int n_neg = 50;
  NegativeMode negatives = NegativeMode::All;
  ConsistencyMode consistency = ConsistencyMode::KlClean;
  LabelSource labels = LabelSource::Pseudo;
  std::uint64_t seed = 1;
  int eval_every = 0;        // 0: evaluate after the last epoch only
  int checkpoint_every = 0;  // 0: final checkpoint only

  void validate() const {
    require(epochs >= 1, Errc::InvalidConfig, "epochs must be >= 1");
    require(iterations >= 0, Errc::InvalidConfig, "iterations must be >= 0");
    require(hidden >= 1 && output >= 1, Errc::InvalidConfig, "encoder widths must be positive");
    require(alpha >= 0.0 && alpha <= 1.0, Errc::InvalidMomentum, "alpha must lie in [0, 1]");
    require(n_neg >= 1, Errc::InvalidConfig, "n_neg must be >= 1");
    require(optimizer.base_lr >= 0.0 && optimizer.warmup_epochs >= 0 && optimizer.weight_decay >= 0.0,
            Errc::InvalidConfig, "invalid optimizer settings");
    require(eval_every >= 0 && checkpoint_every >= 0, Errc::InvalidConfig,
            "eval/checkpoint intervals must be >= 0");
    batch.validate();
    temperatures.validate();
    weights.validate();
    cluster.validate();
    perturbation.validate();
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochReport {
  int epoch = 0;
  int cluster_count = 0;
  int outlier_count = 0;
  int iterations_run = 0;
  int iterations_skipped = 0;
  double agnostic = 0.0;
  double cross = 0.0;
  double hard = 0.0;
  double soft = 0.0;
  double total = 0.0;
  double mean_kl = 0.0;
  std::optional<EvalReport> eval;
  double wall_seconds = 0.0;

  /// Everything but wall time.
  bool same_outcome(const EpochReport& o) const {
    return epoch == o.epoch && cluster_count == o.cluster_count && outlier_count == o.outlier_count &&
           iterations_run == o.iterations_run && iterations_skipped == o.iterations_skipped &&
           agnostic == o.agnostic && cross == o.cross && hard == o.hard && soft == o.soft &&
           total == o.total && mean_kl == o.mean_kl && eval == o.eval;
  }
};

struct TrainState {
  EncoderPair pair;
  OptimizerState optimizer;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

inline TrainState init_state(const TrainConfig& config, int input_dim) {
  const EncoderShape shape{input_dim, config.hidden, config.output};
  auto online = init_encoder(shape, derive_seed(config.seed, {0xE7C0DEULL}));
  return {EncoderPair::from_online(std::move(online), config.alpha),
          OptimizerState::for_shape(shape, config.optimizer)};
}

/// Momentum-encoder representations of every sample, in dataset order.
inline FeatureMatrix extract_bank(const EncoderPair& pair, const FeatureMatrix& features) {
  require(features.rows() > 0, Errc::EmptyDataset, "cannot encode an empty dataset");
  return forward(pair.momentum, features);
}

/// Frozen per-epoch inputs of every iteration.
struct EpochContext {
  const FeatureMatrix* features = nullptr;
  std::span<const int> cameras;
  const CameraStyle* style = nullptr;
  const ProxyMemory* memory = nullptr;
  int epoch = 0;
};

struct IterationResult {
  LossBreakdown losses;
  double kl = 0.0;  // KL(P || Q) against clean targets, whatever the loss variant
};

inline Matrix gather_rows(const FeatureMatrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

/// One optimization step: three encoder passes (online on the perturbed batch,
/// momentum on the same perturbed batch, momentum on the clean batch), the
/// combined loss, an optimizer step on the online encoder and the EMA update.
inline IterationResult train_iteration(TrainState& state, const TrainConfig& config,
                                       const EpochContext& ctx, const IdentityBatch& batch,
                                       std::uint64_t seed) {
  const auto& t = config.temperatures;
  const Matrix clean = gather_rows(*ctx.features, batch.indices);
  const Matrix augmented =
      perturb(clean, config.perturbation, derive_seed(seed, {1}), batch.cameras, *ctx.style);

  const Matrix f = forward(state.pair.online, augmented);
  const Matrix m_aug = forward(state.pair.momentum, augmented);
  const Matrix m_clean = forward(state.pair.momentum, clean);
  Matrix target = m_clean;
  if (config.consistency == ConsistencyMode::StrongStrong) {
    target = forward(state.pair.momentum, perturb(clean, config.perturbation, derive_seed(seed, {2}),
                                                  batch.cameras, *ctx.style));
  }

  LossComponents c;
  c.agnostic = proxy_agnostic_loss(f, batch.labels, *ctx.memory, t.agnostic);
  c.cross = config.memory == MemoryMode::Aware
                ? cross_camera_loss(f, batch.labels, batch.cameras, *ctx.memory, t.cross, config.n_neg)
                : LossTerm::zero(f.rows(), f.cols());
  c.hard = hard_instance_loss(f, m_aug, batch.labels, t.hard, config.negatives);
  const auto soft_mode =
      config.consistency == ConsistencyMode::Mse ? ConsistencyMode::Mse : ConsistencyMode::KlClean;
  c.soft = soft_instance_loss(f, m_aug, target, t.soft, soft_mode);

  IterationResult r;
  r.losses = total_loss(c, config.weights);
  r.kl = kl_divergence(consistency_distributions(f, m_aug, m_clean, t.soft));

  const auto grads = backward(state.pair.online, augmented, r.losses.grad_total);
  optimizer_step(state.optimizer, state.pair.online, grads, ctx.epoch);
  ema_update(state.pair);
  return r;
}

/// Pseudo labels, or true identities remapped to 0..k-1 in oracle mode.
inline ClusterAssignment oracle_assignment(const EmbeddingDataset& data) {
  std::map<int, int> remap;
  ClusterAssignment a;
  for (int id : data.identity_labels()) {
    auto [it, inserted] = remap.try_emplace(id, static_cast<int>(remap.size()));
    a.labels.push_back(it->second);
  }
  a.cluster_count = static_cast<int>(remap.size());
  return a;
}

struct EvalSets {
  const EmbeddingDataset* query = nullptr;
  const EmbeddingDataset* gallery = nullptr;
};

inline RetrievalSet embed_for_retrieval(const EncoderParams& params, const EmbeddingDataset& data) {
  return {forward(params, data.features), data.identity_labels(), data.cameras};
}

struct TrainResult {
  TrainState state;
  std::vector<EpochReport> reports;

  /// The momentum encoder is the inference model.
  const EncoderParams& model() const { return state.pair.momentum; }
};

struct TrainHooks {
  std::function<void(const EpochReport&)> on_epoch;
  /// Called with the state after every checkpoint_every-th epoch and after the last.
  std::function<void(const TrainState&, int epoch)> on_checkpoint;
  /// Called once per epoch with the epoch-start bank and its pseudo labels.
  std::function<void(int epoch, const FeatureMatrix& bank, const PseudoLabelResult&)> on_cluster;
  std::function<void(const std::string&)> on_warning;
};

inline constexpr int kMaxFailedClusterings = 3;

inline TrainResult train(const TrainConfig& config, const EmbeddingDataset& data,
                         const EvalSets& eval_sets = {}, const TrainHooks& hooks = {},
                         std::optional<TrainState> initial = std::nullopt) {
  config.validate();
  data.validate();
  const auto input_dim = static_cast<int>(data.dim());
  TrainResult result{initial ? std::move(*initial) : init_state(config, input_dim), {}};
  auto& state = result.state;
  require(state.pair.online.shape().input == input_dim, Errc::DimensionMismatch,
          "encoder input width does not match the dataset");
  state.pair.alpha = config.alpha;

  const CameraStyle style = CameraStyle::estimate(data.features, data.cameras);
  std::optional<ClusterAssignment> oracle;
  if (config.labels == LabelSource::Oracle) oracle = oracle_assignment(data);
  auto warn = [&](const std::string& msg) {
    if (hooks.on_warning) hooks.on_warning(msg);
  };

  int failed_clusterings = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    EpochReport report;
    report.epoch = epoch;

    const FeatureMatrix bank = extract_bank(state.pair, data.features);
    PseudoLabelResult labels;
    if (oracle) {
      labels.assignment = *oracle;
    } else {
      labels = generate_pseudo_labels(bank, config.cluster);
    }
    if (hooks.on_cluster) hooks.on_cluster(epoch, bank, labels);
    const auto& assignment = labels.assignment;
    report.cluster_count = assignment.cluster_count;
    report.outlier_count = static_cast<int>(assignment.outlier_count());

    if (assignment.cluster_count == 0) {
      ++failed_clusterings;
      require(failed_clusterings <= kMaxFailedClusterings, Errc::NoClustersFound,
              "no clusters for " + std::to_string(failed_clusterings) + " consecutive epochs");
      warn("epoch " + std::to_string(epoch) + ": no clusters found, skipping");
      report.iterations_skipped = config.iterations;
    } else if (assignment.cluster_count < config.batch.identities) {
      failed_clusterings = 0;
      warn("epoch " + std::to_string(epoch) + ": " + std::to_string(assignment.cluster_count) +
           " clusters, fewer than the batch needs; skipping");
      report.iterations_skipped = config.iterations;
    } else {
      failed_clusterings = 0;
      const ProxyMemory memory = build_proxies(bank, assignment, data.cameras, config.memory, epoch);
      const EpochContext ctx{&data.features, data.cameras, &style, &memory, epoch};
      for (int it = 0; it < config.iterations; ++it) {
        const auto seed = derive_seed(config.seed, {static_cast<std::uint64_t>(epoch),
                                                    static_cast<std::uint64_t>(it)});
        try {
          const auto batch = sample_pk_batch(assignment, config.batch, derive_seed(seed, {0}), data.cameras);
          const auto r = train_iteration(state, config, ctx, batch, seed);
          ++report.iterations_run;
          report.agnostic += r.losses.agnostic;
          report.cross += r.losses.cross;
          report.hard += r.losses.hard;
          report.soft += r.losses.soft;
          report.total += r.losses.total;
          report.mean_kl += r.kl;
        } catch (const Error& e) {
          if (e.code() != Errc::NoNegatives && e.code() != Errc::InsufficientClusters) throw;
          ++report.iterations_skipped;
          warn(e.what());
        }
      }
      if (report.iterations_run > 0) {
        const double n = report.iterations_run;
        for (double* v : {&report.agnostic, &report.cross, &report.hard, &report.soft, &report.total,
                          &report.mean_kl}) {
          *v /= n;
        }
      }
    }

    const bool last = epoch + 1 == config.epochs;
    if (eval_sets.query && eval_sets.gallery &&
        (last || (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0))) {
      report.eval = evaluate(embed_for_retrieval(state.pair.momentum, *eval_sets.query),
                             embed_for_retrieval(state.pair.momentum, *eval_sets.gallery));
    }
    if (hooks.on_checkpoint && (last || (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0))) {
      hooks.on_checkpoint(state, epoch);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (hooks.on_epoch) hooks.on_epoch(report);
    result.reports.push_back(report);
  }
  return result;
}

}  // namespace reid

#endif  // REID_TRAINER_HPP
