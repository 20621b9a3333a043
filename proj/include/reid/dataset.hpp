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

#ifndef REID_DATASET_HPP
#define REID_DATASET_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "reid/core_math.hpp"
#include "reid/error.hpp"
#include "reid/rng.hpp"

namespace reid {

/// Samples with camera ids and features. True identities are optional and
/// only ever read by the evaluator and the supervised-oracle mode.
struct EmbeddingDataset {
  std::vector<std::string> sample_ids;
  std::vector<std::optional<int>> identities;
  std::vector<int> cameras;
  FeatureMatrix features;

  std::size_t size() const { return sample_ids.size(); }
  Eigen::Index dim() const { return features.cols(); }

  int camera_count() const {
    int c = 0;
    for (int cam : cameras) c = std::max(c, cam + 1);
    return c;
  }

  bool has_identities() const {
    for (const auto& id : identities) {
      if (!id) return false;
    }
    return !identities.empty();
  }

  /// True identities; throws if any is unknown.
  std::vector<int> identity_labels() const {
    std::vector<int> out;
    out.reserve(identities.size());
    for (std::size_t i = 0; i < identities.size(); ++i) {
      require(identities[i].has_value(), Errc::InvalidConfig,
              "sample " + sample_ids[i] + " has no identity");
      out.push_back(*identities[i]);
    }
    return out;
  }

  void validate() const {
    const auto n = size();
    require(n > 0, Errc::EmptyDataset, "dataset has no records");
    require(identities.size() == n && cameras.size() == n &&
                static_cast<std::size_t>(features.rows()) == n,
            Errc::DimensionMismatch, "dataset columns differ in length");
    std::set<std::string_view> seen;
    for (const auto& id : sample_ids) {
      require(seen.insert(id).second, Errc::DuplicateId, "duplicate sample id " + id);
    }
    for (int c : cameras) require(c >= 0, Errc::ParseError, "negative camera id");
    require(features.allFinite(), Errc::NonFiniteInput, "non-finite feature values");
  }

  friend bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b) {
    return a.sample_ids == b.sample_ids && a.identities == b.identities && a.cameras == b.cameras &&
           a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
           a.features == b.features;
  }
};

struct SyntheticSpec {
  int identities = 20;
  int cameras = 4;
  int samples_per_camera = 8;
  int dim = 64;
  double dispersion = 1.0;   // norm of each identity center
  double sigma_id = 0.8;     // expected norm of per-sample noise
  double sigma_cam = 0.7;    // expected norm of each camera offset
  std::uint64_t seed = 1;

  void validate() const {
    require(identities >= 1 && cameras >= 1 && samples_per_camera >= 1 && dim >= 1,
            Errc::InvalidConfig, "synthetic counts must be positive");
    require(dispersion >= 0.0 && sigma_id >= 0.0 && sigma_cam >= 0.0, Errc::InvalidConfig,
            "synthetic scales must be non-negative");
  }

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Training identities and disjoint test identities sharing the same cameras.
/// For each test (identity, camera) the first sample is a query and the rest
/// go to the gallery.
struct SyntheticData {
  EmbeddingDataset train;
  EmbeddingDataset query;
  EmbeddingDataset gallery;
  Matrix train_centers;
  Matrix camera_offsets;
  std::vector<std::string> warnings;
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData out;
  if (spec.dim < 8) {
    out.warnings.push_back("ConfigWarning: dim " + std::to_string(spec.dim) +
                           " is likely too small to separate identities");
  }
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int d = spec.dim;
  const double per_coord = 1.0 / std::sqrt(static_cast<double>(d));

  auto draw = [&](double scale) {
    Vector v(d);
    for (int j = 0; j < d; ++j) v[j] = gauss(rng);
    return Vector(scale * per_coord * v);
  };
  auto draw_center = [&] {
    Vector v(d);
    do {
      for (int j = 0; j < d; ++j) v[j] = gauss(rng);
    } while (v.norm() == 0.0);
    return Vector(spec.dispersion * v / v.norm());
  };

  out.camera_offsets.resize(spec.cameras, d);
  for (int c = 0; c < spec.cameras; ++c) out.camera_offsets.row(c) = draw(spec.sigma_cam).transpose();
  out.train_centers.resize(spec.identities, d);
  for (int i = 0; i < spec.identities; ++i) out.train_centers.row(i) = draw_center().transpose();
  Matrix test_centers(spec.identities, d);
  for (int i = 0; i < spec.identities; ++i) test_centers.row(i) = draw_center().transpose();

  const auto per_split = static_cast<Eigen::Index>(spec.identities) * spec.cameras;
  const auto train_n = per_split * spec.samples_per_camera;
  out.train.features.resize(train_n, d);
  out.query.features.resize(per_split, d);
  out.gallery.features.resize(per_split * (spec.samples_per_camera - 1), d);

  auto push = [&](EmbeddingDataset& ds, Eigen::Index row, const std::string& prefix, int identity,
                  int camera, const Vector& x) {
    ds.features.row(row) = x.transpose();
    ds.sample_ids.push_back(prefix + std::to_string(row));
    ds.identities.emplace_back(identity);
    ds.cameras.push_back(camera);
  };

  Eigen::Index r = 0;
  for (int i = 0; i < spec.identities; ++i) {
    for (int c = 0; c < spec.cameras; ++c) {
      for (int s = 0; s < spec.samples_per_camera; ++s) {
        const Vector x = out.train_centers.row(i).transpose() + out.camera_offsets.row(c).transpose() +
                         draw(spec.sigma_id);
        push(out.train, r++, "tr", i, c, x);
      }
    }
  }
  Eigen::Index q = 0;
  Eigen::Index g = 0;
  for (int i = 0; i < spec.identities; ++i) {
    for (int c = 0; c < spec.cameras; ++c) {
      for (int s = 0; s < spec.samples_per_camera; ++s) {
        const Vector x = test_centers.row(i).transpose() + out.camera_offsets.row(c).transpose() +
                         draw(spec.sigma_id);
        const int identity = spec.identities + i;
        if (s == 0) {
          push(out.query, q++, "q", identity, c, x);
        } else {
          push(out.gallery, g++, "g", identity, c, x);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format:
//
//   reid-embeddings 1
//   dim <d>
//   records <n>
//   cameras <c>
//   end_header
//   <sample id> <identity or ?> <camera> <d reals>
//
// Reals are written in shortest round-trip form, so save/load is bit-exact.

inline constexpr std::string_view kDatasetMagic = "reid-embeddings";
inline constexpr int kDatasetVersion = 1;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_dataset(std::ostream& os, const EmbeddingDataset& ds) {
  ds.validate();
  os << kDatasetMagic << ' ' << kDatasetVersion << '\n'
     << "dim " << ds.dim() << '\n'
     << "records " << ds.size() << '\n'
     << "cameras " << ds.camera_count() << '\n'
     << "end_header\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.sample_ids[i] << ' ';
    if (ds.identities[i]) {
      os << *ds.identities[i];
    } else {
      os << '?';
    }
    os << ' ' << ds.cameras[i];
    for (Eigen::Index j = 0; j < ds.dim(); ++j) os << ' ' << format_double(ds.features(static_cast<Eigen::Index>(i), j));
    os << '\n';
  }
}

namespace detail {

template <class T>
T parse_number(std::string_view token, std::size_t line) {
  T value{};
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, value);
  require(res.ec == std::errc() && res.ptr == end, Errc::ParseError,
          "line " + std::to_string(line) + ": bad number '" + std::string(token) + "'");
  return value;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

inline EmbeddingDataset read_dataset(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++line_no;
    return true;
  };
  auto header_value = [&](std::string_view key) {
    require(next(), Errc::ParseError, "line " + std::to_string(line_no + 1) + ": missing '" + std::string(key) + "'");
    const auto tok = detail::split_ws(line);
    require(tok.size() == 2 && tok[0] == key, Errc::ParseError,
            "line " + std::to_string(line_no) + ": expected '" + std::string(key) + " <value>'");
    return detail::parse_number<long long>(tok[1], line_no);
  };

  if (!next()) fail(Errc::EmptyDataset, "empty file");
  {
    const auto tok = detail::split_ws(line);
    require(tok.size() == 2 && tok[0] == kDatasetMagic, Errc::ParseError, "line 1: not a dataset file");
    require(detail::parse_number<int>(tok[1], 1) == kDatasetVersion, Errc::ParseError,
            "line 1: unsupported format version");
  }
  const auto dim = header_value("dim");
  const auto records = header_value("records");
  const auto cameras = header_value("cameras");
  require(dim >= 1 && records >= 0 && cameras >= 0, Errc::ParseError, "invalid header values");
  require(next() && detail::split_ws(line) == std::vector<std::string_view>{"end_header"},
          Errc::ParseError, "line " + std::to_string(line_no) + ": expected end_header");
  require(records > 0, Errc::EmptyDataset, "dataset declares no records");

  EmbeddingDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(records), static_cast<Eigen::Index>(dim));
  std::set<std::string> seen;
  for (long long r = 0; r < records; ++r) {
    require(next(), Errc::ParseError,
            "line " + std::to_string(line_no + 1) + ": expected " + std::to_string(records) +
                " records, found " + std::to_string(r));
    const auto tok = detail::split_ws(line);
    require(static_cast<long long>(tok.size()) == dim + 3, Errc::ParseError,
            "line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                " feature values, found " + std::to_string(static_cast<long long>(tok.size()) - 3));
    std::string id(tok[0]);
    require(seen.insert(id).second, Errc::DuplicateId,
            "line " + std::to_string(line_no) + ": duplicate sample id " + id);
    ds.sample_ids.push_back(std::move(id));
    if (tok[1] == "?") {
      ds.identities.emplace_back(std::nullopt);
    } else {
      ds.identities.emplace_back(detail::parse_number<int>(tok[1], line_no));
    }
    const int cam = detail::parse_number<int>(tok[2], line_no);
    require(cam >= 0 && cam < cameras, Errc::ParseError,
            "line " + std::to_string(line_no) + ": camera id outside 0.." + std::to_string(cameras - 1));
    ds.cameras.push_back(cam);
    for (long long j = 0; j < dim; ++j) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          detail::parse_number<double>(tok[static_cast<std::size_t>(j + 3)], line_no);
    }
  }
  while (next()) {
    require(detail::split_ws(line).empty(), Errc::ParseError,
            "line " + std::to_string(line_no) + ": trailing data after declared records");
  }
  ds.validate();
  return ds;
}

inline void save_dataset(const EmbeddingDataset& ds, const std::string& path) {
  std::ofstream os(path);
  require(static_cast<bool>(os), Errc::IoError, "cannot write " + path);
  write_dataset(os, ds);
  require(static_cast<bool>(os), Errc::IoError, "write failed for " + path);
}

inline EmbeddingDataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), Errc::IoError, "cannot read " + path);
  return read_dataset(is);
}

}  // namespace reid

#endif  // REID_DATASET_HPP
