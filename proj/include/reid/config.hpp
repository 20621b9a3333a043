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

#ifndef REID_CONFIG_HPP
#define REID_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "reid/dataset.hpp"
#include "reid/error.hpp"
#include "reid/trainer.hpp"

namespace reid {

inline constexpr const char* kSeedEnvVar = "REID_SEED";

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  require(r.ec == std::errc() && r.ptr == end, Errc::ParseError,
          "bad value '" + text + "' for key " + key);
  return v;
}

template <class E>
E parse_enum(const std::string& key, const std::string& text,
             std::initializer_list<std::pair<std::string_view, E>> names) {
  for (const auto& [name, value] : names) {
    if (text == name) return value;
  }
  std::string options;
  for (const auto& [name, value] : names) options += (options.empty() ? "" : "|") + std::string(name);
  fail(Errc::ParseError, "bad value '" + text + "' for key " + key + " (expected " + options + ")");
}

template <class E>
std::string enum_name(E value, std::initializer_list<std::pair<std::string_view, E>> names) {
  for (const auto& [name, v] : names) {
    if (v == value) return std::string(name);
  }
  return "?";
}

inline const std::initializer_list<std::pair<std::string_view, MemoryMode>> kMemoryNames = {
    {"aware", MemoryMode::Aware}, {"agnostic", MemoryMode::Agnostic}};
inline const std::initializer_list<std::pair<std::string_view, NegativeMode>> kNegativeNames = {
    {"all", NegativeMode::All}, {"hardest", NegativeMode::Hardest}};
inline const std::initializer_list<std::pair<std::string_view, ConsistencyMode>> kConsistencyNames = {
    {"kl", ConsistencyMode::KlClean}, {"mse", ConsistencyMode::Mse},
    {"strong-strong", ConsistencyMode::StrongStrong}};
inline const std::initializer_list<std::pair<std::string_view, LabelSource>> kLabelNames = {
    {"pseudo", LabelSource::Pseudo}, {"oracle", LabelSource::Oracle}};

}  // namespace detail

/// One run-configuration key: how to read it from and write it to a
/// TrainConfig as text.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

/// Every configurable key, in the order written to config files.
inline const std::vector<ConfigKey>& config_keys() {
  using detail::parse_value;
  auto real = [](std::string name, std::string help, auto member) {
    return ConfigKey{name, std::move(help),
                     [member, name](TrainConfig& c, const std::string& v) { member(c) = parse_value<double>(name, v); },
                     [member](TrainConfig c) { return format_double(member(c)); }};
  };
  auto integer = [](std::string name, std::string help, auto member) {
    return ConfigKey{name, std::move(help),
                     [member, name](TrainConfig& c, const std::string& v) { member(c) = parse_value<int>(name, v); },
                     [member](TrainConfig c) { return std::to_string(member(c)); }};
  };
  auto choice = [](std::string name, std::string help, auto member, const auto& names) {
    return ConfigKey{name, std::move(help),
                     [member, name, &names](TrainConfig& c, const std::string& v) {
                       member(c) = detail::parse_enum(name, v, names);
                     },
                     [member, &names](TrainConfig c) { return detail::enum_name(member(c), names); }};
  };

  static const std::vector<ConfigKey> keys = {
      integer("epochs", "training epochs (full scale: 40)", [](TrainConfig& c) -> int& { return c.epochs; }),
      integer("iterations", "iterations per epoch (full scale: 400)",
              [](TrainConfig& c) -> int& { return c.iterations; }),
      integer("batch.identities", "pseudo identities per batch N_P",
              [](TrainConfig& c) -> int& { return c.batch.identities; }),
      integer("batch.instances", "instances per identity N_K",
              [](TrainConfig& c) -> int& { return c.batch.instances; }),
      real("tau.agnostic", "cluster-proxy temperature", [](TrainConfig& c) -> double& { return c.temperatures.agnostic; }),
      real("tau.cross", "cross-camera proxy temperature", [](TrainConfig& c) -> double& { return c.temperatures.cross; }),
      real("tau.hard", "hard instance temperature", [](TrainConfig& c) -> double& { return c.temperatures.hard; }),
      real("tau.soft", "soft consistency temperature", [](TrainConfig& c) -> double& { return c.temperatures.soft; }),
      real("lambda.hard", "hard instance loss weight (0 disables)",
           [](TrainConfig& c) -> double& { return c.weights.hard; }),
      real("lambda.soft", "soft consistency loss weight (0 disables)",
           [](TrainConfig& c) -> double& { return c.weights.soft; }),
      integer("cluster.k1", "k-reciprocal neighborhood size", [](TrainConfig& c) -> int& { return c.cluster.k1; }),
      integer("cluster.k2", "local query expansion size", [](TrainConfig& c) -> int& { return c.cluster.k2; }),
      real("cluster.eps", "DBSCAN distance threshold", [](TrainConfig& c) -> double& { return c.cluster.eps; }),
      integer("cluster.min_samples", "DBSCAN minimum neighborhood (self included)",
              [](TrainConfig& c) -> int& { return c.cluster.min_samples; }),
      real("perturb.noise", "expected norm of augmentation noise",
           [](TrainConfig& c) -> double& { return c.perturbation.noise; }),
      real("perturb.dropout", "fraction of coordinates erased",
           [](TrainConfig& c) -> double& { return c.perturbation.dropout; }),
      real("perturb.restyle_prob", "probability of swapping camera style",
           [](TrainConfig& c) -> double& { return c.perturbation.restyle_prob; }),
      real("alpha", "momentum encoder EMA coefficient", [](TrainConfig& c) -> double& { return c.alpha; }),
      real("optim.lr", "Adam base learning rate", [](TrainConfig& c) -> double& { return c.optimizer.base_lr; }),
      integer("optim.warmup_epochs", "linear warmup epochs",
              [](TrainConfig& c) -> int& { return c.optimizer.warmup_epochs; }),
      real("optim.weight_decay", "decoupled weight decay",
           [](TrainConfig& c) -> double& { return c.optimizer.weight_decay; }),
      real("optim.beta1", "Adam first-moment decay", [](TrainConfig& c) -> double& { return c.optimizer.beta1; }),
      real("optim.beta2", "Adam second-moment decay", [](TrainConfig& c) -> double& { return c.optimizer.beta2; }),
      real("optim.epsilon", "Adam denominator epsilon", [](TrainConfig& c) -> double& { return c.optimizer.epsilon; }),
      integer("encoder.hidden", "hidden layer width", [](TrainConfig& c) -> int& { return c.hidden; }),
      integer("encoder.output", "embedding dimension", [](TrainConfig& c) -> int& { return c.output; }),
      choice("memory", "proxy memory mode (aware|agnostic)", [](TrainConfig& c) -> MemoryMode& { return c.memory; },
             detail::kMemoryNames),
      integer("n_neg", "nearest negative camera proxies", [](TrainConfig& c) -> int& { return c.n_neg; }),
      choice("negatives", "hard instance denominator (all|hardest)",
             [](TrainConfig& c) -> NegativeMode& { return c.negatives; }, detail::kNegativeNames),
      choice("consistency", "consistency variant (kl|mse|strong-strong)",
             [](TrainConfig& c) -> ConsistencyMode& { return c.consistency; }, detail::kConsistencyNames),
      choice("labels", "label source (pseudo|oracle)", [](TrainConfig& c) -> LabelSource& { return c.labels; },
             detail::kLabelNames),
      ConfigKey{"seed", "master seed (default overridable via REID_SEED)",
                [](TrainConfig& c, const std::string& v) { c.seed = parse_value<std::uint64_t>("seed", v); },
                [](const TrainConfig& c) { return std::to_string(c.seed); }},
      integer("eval_every", "evaluate every n epochs (0: last only)",
              [](TrainConfig& c) -> int& { return c.eval_every; }),
      integer("checkpoint_every", "checkpoint every n epochs (0: last only)",
              [](TrainConfig& c) -> int& { return c.checkpoint_every; }),
  };
  return keys;
}

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

/// Defaults, with the seed taken from REID_SEED when set.
inline TrainConfig default_config() {
  TrainConfig c;
  if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
    c.seed = detail::parse_value<std::uint64_t>(kSeedEnvVar, env);
  }
  return c;
}

inline void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  const auto* k = find_config_key(key);
  require(k != nullptr, Errc::ParseError, "unknown config key '" + key + "'");
  k->set(config, value);
}

/// key = value lines; '#' starts a comment. Keys outside the config registry
/// are returned in `extra` (the manifest uses them for file paths).
inline TrainConfig parse_config(std::istream& is, TrainConfig base,
                                std::map<std::string, std::string>* extra = nullptr) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    require(eq != std::string::npos, Errc::ParseError,
            "line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(std::string_view(text).substr(0, eq));
    const auto value = detail::trim(std::string_view(text).substr(eq + 1));
    if (const auto* k = find_config_key(key)) {
      try {
        k->set(base, value);
      } catch (const Error& e) {
        fail(Errc::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      require(extra != nullptr, Errc::ParseError,
              "line " + std::to_string(line_no) + ": unknown config key '" + key + "'");
      (*extra)[key] = value;
    }
  }
  return base;
}

inline TrainConfig load_config(const std::string& path, TrainConfig base,
                               std::map<std::string, std::string>* extra = nullptr) {
  std::ifstream is(path);
  require(static_cast<bool>(is), Errc::IoError, "cannot read " + path);
  return parse_config(is, std::move(base), extra);
}

inline void write_config(std::ostream& os, const TrainConfig& config) {
  for (const auto& k : config_keys()) os << k.name << " = " << k.get(config) << '\n';
}

/// Full configuration plus dataset paths; enough to rerun a training job.
struct Manifest {
  TrainConfig config;
  std::string train_path;
  std::string query_path;
  std::string gallery_path;
};

inline void write_manifest(std::ostream& os, const Manifest& m) {
  os << "# reid training manifest\n";
  os << "train = " << m.train_path << '\n';
  if (!m.query_path.empty()) os << "query = " << m.query_path << '\n';
  if (!m.gallery_path.empty()) os << "gallery = " << m.gallery_path << '\n';
  write_config(os, m.config);
}

inline Manifest read_manifest(std::istream& is, TrainConfig base) {
  std::map<std::string, std::string> extra;
  Manifest m;
  m.config = parse_config(is, std::move(base), &extra);
  for (const auto& [k, v] : extra) {
    if (k == "train") {
      m.train_path = v;
    } else if (k == "query") {
      m.query_path = v;
    } else if (k == "gallery") {
      m.gallery_path = v;
    } else {
      fail(Errc::ParseError, "unknown manifest key '" + k + "'");
    }
  }
  return m;
}

}  // namespace reid

#endif  // REID_CONFIG_HPP
