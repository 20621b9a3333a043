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

#ifndef REID_ERROR_HPP
#define REID_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace reid {

enum class Errc {
  DegenerateVector,
  DimensionMismatch,
  InvalidTemperature,
  NonFiniteInput,
  InvalidMomentum,
  NonFiniteGradient,
  InsufficientSamples,
  InvalidDistanceMatrix,
  InvalidConfig,
  NoClustersFound,
  ModeMismatch,
  InsufficientClusters,
  ProxyNotFound,
  NoNegatives,
  NonFiniteLoss,
  NoRelevantItems,
  EmptyEvaluation,
  ParseError,
  DuplicateId,
  EmptyDataset,
  IoError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::DegenerateVector: return "DegenerateVector";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidTemperature: return "InvalidTemperature";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::InvalidMomentum: return "InvalidMomentum";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::InvalidDistanceMatrix: return "InvalidDistanceMatrix";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NoClustersFound: return "NoClustersFound";
    case Errc::ModeMismatch: return "ModeMismatch";
    case Errc::InsufficientClusters: return "InsufficientClusters";
    case Errc::ProxyNotFound: return "ProxyNotFound";
    case Errc::NoNegatives: return "NoNegatives";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NoRelevantItems: return "NoRelevantItems";
    case Errc::EmptyEvaluation: return "EmptyEvaluation";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the trainer's skip policy, the CLI's exit codes) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace reid

#endif  // REID_ERROR_HPP
