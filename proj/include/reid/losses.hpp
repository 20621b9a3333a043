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

#ifndef REID_LOSSES_HPP
#define REID_LOSSES_HPP

#include <cmath>
#include <string>
#include <vector>

#include "reid/core_math.hpp"
#include "reid/error.hpp"
#include "reid/proxy_memory.hpp"

namespace reid {

struct Temperatures {
  double agnostic = 0.5;
  double cross = 0.07;
  double hard = 0.1;
  double soft = 0.4;

  void validate() const {
    for (double t : {agnostic, cross, hard, soft}) {
      require(t > 0.0 && std::isfinite(t), Errc::InvalidTemperature, "temperatures must be positive");
    }
  }

  friend bool operator==(const Temperatures&, const Temperatures&) = default;
};

struct LossWeights {
  double hard = 1.0;
  double soft = 10.0;

  void validate() const {
    require(hard >= 0.0 && soft >= 0.0, Errc::InvalidConfig, "loss weights must be non-negative");
  }

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Denominator of the hard instance loss.
enum class NegativeMode { All, Hardest };

/// How the soft consistency target and divergence are formed.
/// KlClean: KL against clean momentum similarities.
/// Mse: squared error against the same clean targets.
/// StrongStrong: KL against a second, independently perturbed momentum view.
enum class ConsistencyMode { KlClean, Mse, StrongStrong };

/// Loss value and its gradient w.r.t. each online representation (row).
struct LossTerm {
  double value = 0.0;
  Matrix grad;

  static LossTerm zero(Eigen::Index rows, Eigen::Index cols) { return {0.0, Matrix::Zero(rows, cols)}; }
};

/// -log(exp(pos/t) / (exp(pos/t) + sum_j exp(neg_j/t))) and its derivatives
/// with respect to the similarity scalars.
struct ContrastiveTerm {
  double value = 0.0;
  double d_positive = 0.0;
  Vector d_negatives;
};

inline ContrastiveTerm contrastive_term(double positive, const Vector& negatives, double temperature) {
  require(temperature > 0.0, Errc::InvalidTemperature, "temperature must be positive");
  Vector logits(negatives.size() + 1);
  logits[0] = positive / temperature;
  logits.tail(negatives.size()) = negatives / temperature;
  const double lse = log_sum_exp(logits);
  const Vector prob = (logits.array() - lse).exp().matrix();
  ContrastiveTerm t;
  t.value = lse - logits[0];
  t.d_positive = (prob[0] - 1.0) / temperature;
  t.d_negatives = prob.tail(negatives.size()) / temperature;
  return t;
}

/// Cluster-proxy softmax loss: every anchor against all cluster proxies.
inline LossTerm proxy_agnostic_loss(const Matrix& f, const std::vector<int>& labels,
                                    const Matrix& proxies, double temperature) {
  require(temperature > 0.0, Errc::InvalidTemperature, "temperature must be positive");
  require(f.rows() == static_cast<Eigen::Index>(labels.size()), Errc::DimensionMismatch,
          "labels and batch differ in length");
  require(proxies.rows() >= 2, Errc::ProxyNotFound, "need at least two cluster proxies");
  require(proxies.cols() == f.cols(), Errc::DimensionMismatch, "proxy dimension mismatch");

  const auto batch = f.rows();
  LossTerm out = LossTerm::zero(batch, f.cols());
  const Matrix logits = f * proxies.transpose() / temperature;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    require(label >= 0 && label < proxies.rows(), Errc::ProxyNotFound,
            "no proxy for label " + std::to_string(label));
    const Vector row = logits.row(i).transpose();
    const double lse = log_sum_exp(row);
    Vector dlogits = (row.array() - lse).exp().matrix();
    out.value += lse - row[label];
    dlogits[label] -= 1.0;
    out.grad.row(i) = (proxies.transpose() * dlogits).transpose() / temperature;
  }
  out.value /= static_cast<double>(batch);
  out.grad /= static_cast<double>(batch);
  return out;
}

inline LossTerm proxy_agnostic_loss(const Matrix& f, const std::vector<int>& labels,
                                    const ProxyMemory& memory, double temperature) {
  return proxy_agnostic_loss(f, labels, memory.cluster_matrix(), temperature);
}

struct AnchorLoss {
  double value = 0.0;
  Vector grad;
};

/// Cross-camera proxy loss for one anchor of cluster `cluster` seen by camera
/// `camera`. Averages one softmax term per positive proxy of the same cluster
/// under another camera; each term shares the n_neg nearest negative proxies.
inline AnchorLoss cross_camera_loss(const Eigen::Ref<const Vector>& f, int cluster, int camera,
                                    const ProxyMemory& memory, double temperature, int n_neg) {
  require(memory.mode() == MemoryMode::Aware, Errc::ModeMismatch,
          "cross-camera loss needs a camera-aware memory");
  require(temperature > 0.0, Errc::InvalidTemperature, "temperature must be positive");
  const Matrix& cams = memory.camera_matrix();
  const auto& proxies = memory.camera_proxies();

  AnchorLoss out{0.0, Vector::Zero(f.size())};
  std::vector<int> positives;
  for (int j : memory.camera_proxies_of(cluster)) {
    if (proxies[static_cast<std::size_t>(j)].camera_id != camera) positives.push_back(j);
  }
  if (positives.empty()) return out;

  const auto negatives = nearest_negative_proxies(memory, f, cluster, n_neg);
  Vector neg_sims(static_cast<Eigen::Index>(negatives.size()));
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    neg_sims[static_cast<Eigen::Index>(j)] = cams.row(negatives[j]).dot(f);
  }
  for (int pos : positives) {
    const auto t = contrastive_term(cams.row(pos).dot(f), neg_sims, temperature);
    out.value += t.value;
    out.grad += t.d_positive * cams.row(pos).transpose();
    for (std::size_t j = 0; j < negatives.size(); ++j) {
      out.grad += t.d_negatives[static_cast<Eigen::Index>(j)] * cams.row(negatives[j]).transpose();
    }
  }
  const auto count = static_cast<double>(positives.size());
  out.value /= count;
  out.grad /= count;
  return out;
}

/// Batch mean of the per-anchor cross-camera loss; anchors without a
/// cross-camera positive contribute zero.
inline LossTerm cross_camera_loss(const Matrix& f, const std::vector<int>& labels,
                                  const std::vector<int>& cameras, const ProxyMemory& memory,
                                  double temperature, int n_neg) {
  require(memory.mode() == MemoryMode::Aware, Errc::ModeMismatch,
          "cross-camera loss needs a camera-aware memory");
  require(f.rows() == static_cast<Eigen::Index>(labels.size()) &&
              labels.size() == cameras.size(),
          Errc::DimensionMismatch, "batch, labels and cameras differ in length");
  LossTerm out = LossTerm::zero(f.rows(), f.cols());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const auto a = cross_camera_loss(f.row(i).transpose(), labels[static_cast<std::size_t>(i)],
                                     cameras[static_cast<std::size_t>(i)], memory, temperature, n_neg);
    out.value += a.value;
    out.grad.row(i) = a.grad.transpose();
  }
  out.value /= static_cast<double>(f.rows());
  out.grad /= static_cast<double>(f.rows());
  return out;
}

/// Index of the same-label entry with the lowest similarity (first on ties).
inline int hardest_positive(const Eigen::Ref<const Vector>& similarities, const std::vector<int>& labels,
                            int anchor_label) {
  int best = -1;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] != anchor_label) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    if (best < 0 || similarities[jj] < similarities[best]) best = static_cast<int>(j);
  }
  return best;
}

/// Hard instance contrastive loss: each online anchor against its hardest
/// same-label momentum instance and the other-label momentum instances.
inline LossTerm hard_instance_loss(const Matrix& f, const Matrix& m, const std::vector<int>& labels,
                                   double temperature, NegativeMode negatives = NegativeMode::All) {
  require(f.rows() == m.rows() && f.rows() == static_cast<Eigen::Index>(labels.size()),
          Errc::DimensionMismatch, "online batch, momentum batch and labels differ in length");
  require(f.cols() == m.cols(), Errc::DimensionMismatch, "representation dimension mismatch");
  require(temperature > 0.0, Errc::InvalidTemperature, "temperature must be positive");

  const auto batch = f.rows();
  const Matrix sims = f * m.transpose();
  LossTerm out = LossTerm::zero(batch, f.cols());
  std::vector<Eigen::Index> neg_index;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    const Vector row = sims.row(i).transpose();
    const int pos = hardest_positive(row, labels, label);

    neg_index.clear();
    for (Eigen::Index j = 0; j < batch; ++j) {
      if (labels[static_cast<std::size_t>(j)] != label) neg_index.push_back(j);
    }
    require(!neg_index.empty(), Errc::NoNegatives, "batch holds a single pseudo identity");
    if (negatives == NegativeMode::Hardest) {
      auto top = neg_index.front();
      for (auto j : neg_index) {
        if (row[j] > row[top]) top = j;
      }
      neg_index.assign(1, top);
    }

    Vector neg_sims(static_cast<Eigen::Index>(neg_index.size()));
    for (std::size_t j = 0; j < neg_index.size(); ++j) neg_sims[static_cast<Eigen::Index>(j)] = row[neg_index[j]];
    const auto t = contrastive_term(row[pos], neg_sims, temperature);
    out.value += t.value;
    Eigen::RowVectorXd g = t.d_positive * m.row(pos);
    for (std::size_t j = 0; j < neg_index.size(); ++j) {
      g += t.d_negatives[static_cast<Eigen::Index>(j)] * m.row(neg_index[j]);
    }
    out.grad.row(i) = g;
  }
  out.value /= static_cast<double>(batch);
  out.grad /= static_cast<double>(batch);
  return out;
}

/// Row i: prediction P_i = softmax(<f_i, m_aug_j> / t) and target
/// Q_i = softmax(<t_i, t_j> / t) over the whole batch.
struct ConsistencyDistributions {
  Matrix p;
  Matrix q;
  Matrix log_p;
  Matrix log_q;
};

namespace detail {

inline void log_softmax_rows(const Matrix& logits, Matrix& log_prob, Matrix& prob) {
  log_prob.resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Vector row = logits.row(i).transpose();
    log_prob.row(i) = (row.array() - log_sum_exp(row)).matrix().transpose();
  }
  prob = log_prob.array().exp().matrix();
}

}  // namespace detail

inline ConsistencyDistributions consistency_distributions(const Matrix& f, const Matrix& m_aug,
                                                          const Matrix& target, double temperature) {
  require(temperature > 0.0, Errc::InvalidTemperature, "temperature must be positive");
  require(f.rows() == m_aug.rows() && f.rows() == target.rows(), Errc::DimensionMismatch,
          "prediction and target batches differ in length");
  require(f.cols() == m_aug.cols() && f.cols() == target.cols(), Errc::DimensionMismatch,
          "representation dimension mismatch");
  ConsistencyDistributions d;
  detail::log_softmax_rows(f * m_aug.transpose() / temperature, d.log_p, d.p);
  detail::log_softmax_rows(target * target.transpose() / temperature, d.log_q, d.q);
  return d;
}

/// Per-row KL(P || Q) averaged over anchors.
inline double kl_divergence(const ConsistencyDistributions& d) {
  const Matrix terms = d.p.cwiseProduct(d.log_p - d.log_q);
  return terms.sum() / static_cast<double>(d.p.rows());
}

/// Loss value and its gradient w.r.t. the prediction logits <f_i, m_j> / t.
struct ConsistencyLoss {
  double value = 0.0;
  Matrix d_logits;
};

inline ConsistencyLoss soft_consistency_loss(const ConsistencyDistributions& d,
                                             ConsistencyMode mode = ConsistencyMode::KlClean) {
  const auto rows = static_cast<double>(d.p.rows());
  ConsistencyLoss out;
  Matrix g;  // dL/dP per row
  if (mode == ConsistencyMode::Mse) {
    const Matrix diff = d.p - d.q;
    out.value = diff.squaredNorm() / rows;
    g = 2.0 * diff;
  } else {
    out.value = kl_divergence(d);
    // d/dP of sum P log(P/Q) is log(P/Q) + 1; the constant vanishes under
    // the softmax Jacobian.
    g = d.log_p - d.log_q;
  }
  const Vector centered = d.p.cwiseProduct(g).rowwise().sum();
  out.d_logits = d.p.cwiseProduct(g - centered.replicate(1, g.cols())) / rows;
  return out;
}

/// Soft instance consistency loss with the gradient carried back to f.
inline LossTerm soft_instance_loss(const Matrix& f, const Matrix& m_aug, const Matrix& target,
                                   double temperature, ConsistencyMode mode = ConsistencyMode::KlClean) {
  const auto dists = consistency_distributions(f, m_aug, target, temperature);
  const auto loss = soft_consistency_loss(dists, mode);
  return {loss.value, loss.d_logits * m_aug / temperature};
}

struct LossComponents {
  LossTerm agnostic;
  LossTerm cross;
  LossTerm hard;
  LossTerm soft;
};

struct LossBreakdown {
  double agnostic = 0.0;
  double cross = 0.0;
  double proxy = 0.0;
  double hard = 0.0;
  double soft = 0.0;
  double total = 0.0;
  Matrix grad_proxy;
  Matrix grad_total;
};

/// proxy = agnostic + 0.5 cross; total = proxy + w_h hard + w_s soft.
inline LossBreakdown total_loss(const LossComponents& c, const LossWeights& weights) {
  weights.validate();
  const std::pair<const char*, const LossTerm*> named[] = {
      {"agnostic", &c.agnostic}, {"cross", &c.cross}, {"hard", &c.hard}, {"soft", &c.soft}};
  for (const auto& [name, term] : named) {
    require(std::isfinite(term->value) && term->grad.allFinite(), Errc::NonFiniteLoss,
            std::string("component ") + name + " is not finite");
  }
  LossBreakdown b;
  b.agnostic = c.agnostic.value;
  b.cross = c.cross.value;
  b.proxy = b.agnostic + 0.5 * b.cross;
  b.hard = c.hard.value;
  b.soft = c.soft.value;
  b.total = b.proxy + weights.hard * b.hard + weights.soft * b.soft;
  b.grad_proxy = c.agnostic.grad + 0.5 * c.cross.grad;
  b.grad_total = b.grad_proxy + weights.hard * c.hard.grad + weights.soft * c.soft.grad;
  return b;
}

}  // namespace reid

#endif  // REID_LOSSES_HPP
