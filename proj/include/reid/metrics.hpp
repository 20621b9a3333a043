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

#ifndef REID_METRICS_HPP
#define REID_METRICS_HPP

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "reid/dataset.hpp"
#include "reid/eval.hpp"
#include "reid/trainer.hpp"

namespace reid {

inline constexpr const char* kMetricsHeader =
    "epoch,n_clusters,n_outliers,L_agnostic,L_cross,L_h_ins,L_s_ins,L_total,mean_KL,mAP,rank1,rank5,rank10";

/// One CSV row; the evaluation columns stay empty on epochs without evaluation.
inline std::string metrics_row(const EpochReport& r) {
  std::string row = std::to_string(r.epoch) + ',' + std::to_string(r.cluster_count) + ',' +
                    std::to_string(r.outlier_count);
  for (double v : {r.agnostic, r.cross, r.hard, r.soft, r.total, r.mean_kl}) row += ',' + format_double(v);
  if (r.eval) {
    for (double v : {r.eval->mAP, r.eval->rank1(), r.eval->rank5(), r.eval->rank10()}) {
      row += ',' + format_double(v);
    }
  } else {
    row += ",,,,";
  }
  return row;
}

inline void write_metrics_csv(std::ostream& os, const std::vector<EpochReport>& reports) {
  os << kMetricsHeader << '\n';
  for (const auto& r : reports) os << metrics_row(r) << '\n';
}

/// key=value lines.
inline void write_eval_report(std::ostream& os, const EvalReport& r) {
  os << "mAP=" << format_double(r.mAP) << '\n'
     << "rank1=" << format_double(r.rank1()) << '\n'
     << "rank5=" << format_double(r.rank5()) << '\n'
     << "rank10=" << format_double(r.rank10()) << '\n'
     << "valid_queries=" << r.valid_queries << '\n'
     << "excluded_queries=" << r.excluded_queries << '\n';
}

/// Per-epoch curves for plotting: cluster count and mean KL(P || Q).
struct DiagnosticTables {
  std::vector<std::pair<int, int>> cluster_counts;
  std::vector<std::pair<int, double>> mean_kl;
};

inline DiagnosticTables diagnostics(const std::vector<EpochReport>& reports) {
  DiagnosticTables t;
  for (const auto& r : reports) {
    t.cluster_counts.emplace_back(r.epoch, r.cluster_count);
    t.mean_kl.emplace_back(r.epoch, r.mean_kl);
  }
  return t;
}

inline void write_diagnostics(std::ostream& os, const DiagnosticTables& t) {
  os << "epoch,n_clusters\n";
  for (const auto& [e, n] : t.cluster_counts) os << e << ',' << n << '\n';
  os << "\nepoch,mean_KL\n";
  for (const auto& [e, kl] : t.mean_kl) os << e << ',' << format_double(kl) << '\n';
}

}  // namespace reid

#endif  // REID_METRICS_HPP
