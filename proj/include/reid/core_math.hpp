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

#ifndef REID_CORE_MATH_HPP
#define REID_CORE_MATH_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "reid/error.hpp"

namespace reid {

using Vector = Eigen::VectorXd;
/// Row-major so that each sample (row) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Rows are samples, columns are embedding coordinates.
using FeatureMatrix = Matrix;
/// Cosine similarities, entry (i, j) = <A_i, B_j>.
using SimilarityMatrix = Matrix;
using DistanceMatrix = Matrix;

/// A vector of unit L2 norm. Only constructible through l2_normalize, so a
/// UnitVector in hand is always normalized.
class UnitVector {
 public:
  const Vector& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

  friend UnitVector l2_normalize(const Eigen::Ref<const Vector>& v);

 private:
  explicit UnitVector(Vector v) : values_(std::move(v)) {}
  Vector values_;
};

inline UnitVector l2_normalize(const Eigen::Ref<const Vector>& v) {
  require(v.allFinite(), Errc::NonFiniteInput, "cannot normalize a non-finite vector");
  const double norm = v.norm();
  require(norm > 0.0, Errc::DegenerateVector, "cannot normalize the zero vector");
  return UnitVector(v / norm);
}

inline double cosine(const UnitVector& a, const UnitVector& b) {
  require(a.dim() == b.dim(), Errc::DimensionMismatch,
          "cosine of vectors with dimensions " + std::to_string(a.dim()) + " and " +
              std::to_string(b.dim()));
  return a.values().dot(b.values());
}

/// Normalizes every row in place.
inline void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    require(std::isfinite(norm), Errc::NonFiniteInput, "non-finite row " + std::to_string(i));
    require(norm > 0.0, Errc::DegenerateVector, "zero row " + std::to_string(i));
    m.row(i) /= norm;
  }
}

inline Matrix normalized_rows(Matrix m) {
  normalize_rows(m);
  return m;
}

/// Cosine similarity between every row of a and every row of b. Rows are
/// expected to be unit-normalized already, so this is a plain product.
inline SimilarityMatrix pairwise_similarity(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), Errc::DimensionMismatch,
          "pairwise similarity of dimensions " + std::to_string(a.cols()) + " and " +
              std::to_string(b.cols()));
  return a * b.transpose();
}

/// Temperature-scaled softmax with max subtraction.
inline Vector softmax_row(const Eigen::Ref<const Vector>& sims, double temperature) {
  require(temperature > 0.0 && std::isfinite(temperature), Errc::InvalidTemperature,
          "temperature must be positive, got " + std::to_string(temperature));
  require(sims.size() > 0, Errc::DimensionMismatch, "softmax of an empty vector");
  const double top = sims.maxCoeff();
  Vector out = ((sims.array() - top) / temperature).exp().matrix();
  out /= out.sum();
  return out;
}

/// log-sum-exp of logits, stable for large magnitudes.
inline double log_sum_exp(const Eigen::Ref<const Vector>& logits) {
  const double top = logits.maxCoeff();
  return top + std::log((logits.array() - top).exp().sum());
}

}  // namespace reid

#endif  // REID_CORE_MATH_HPP
