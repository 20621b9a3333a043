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

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "reid/checkpoint.hpp"
#include "reid/config.hpp"
#include "reid/dataset.hpp"
#include "test_util.hpp"

using namespace reid;

namespace {

std::string header(int dim, int records, int cameras) {
  return "reid-embeddings 1\ndim " + std::to_string(dim) + "\nrecords " + std::to_string(records) + "\ncameras " +
         std::to_string(cameras) + "\nend_header\n";
}

std::string parse_error_message(const std::string& text) {
  std::istringstream is(text);
  try {
    read_dataset(is);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    return e.what();
  }
  ADD_FAILURE() << "no error";
  return {};
}

}  // namespace

TEST(Synthetic, Counts) {
  const auto d = generate_synthetic({});
  EXPECT_EQ(d.train.size(), 640u);
  EXPECT_EQ(d.query.size(), 80u);
  EXPECT_EQ(d.gallery.size(), 560u);
  EXPECT_EQ(d.train.dim(), 64);
  EXPECT_TRUE(d.warnings.empty());
}

TEST(Synthetic, SplitsHaveDisjointIdentities) {
  const auto d = generate_synthetic({});
  std::set<int> train, test;
  for (int id : d.train.identity_labels()) train.insert(id);
  for (int id : d.query.identity_labels()) test.insert(id);
  for (int id : d.gallery.identity_labels()) EXPECT_TRUE(test.count(id));
  for (int id : test) EXPECT_FALSE(train.count(id));
  EXPECT_EQ(train.size(), 20u);
  EXPECT_EQ(test.size(), 20u);
}

TEST(Synthetic, NoNoiseMeansIdenticalSamplesPerIdentity) {
  SyntheticSpec s;
  s.sigma_id = 0.0;
  s.sigma_cam = 0.0;
  const auto d = generate_synthetic(s);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    const auto first = static_cast<Eigen::Index>(*d.train.identities[i] * s.cameras * s.samples_per_camera);
    EXPECT_EQ(d.train.features.row(static_cast<Eigen::Index>(i)), d.train.features.row(first));
  }
}

TEST(Synthetic, NearestCenterSeparability) {
  SyntheticSpec s;
  s.sigma_id = 0.05;
  s.sigma_cam = 0.3;
  const auto d = generate_synthetic(s);
  int correct = 0;
  for (Eigen::Index i = 0; i < d.train.features.rows(); ++i) {
    Eigen::Index best = 0;
    (d.train_centers.rowwise() - d.train.features.row(i)).rowwise().squaredNorm().minCoeff(&best);
    correct += best == *d.train.identities[static_cast<std::size_t>(i)];
  }
  EXPECT_GE(correct / static_cast<double>(d.train.size()), 0.9);
}

TEST(Synthetic, DeterministicAndWarnsOnTinyDim) {
  EXPECT_EQ(generate_synthetic({}).train, generate_synthetic({}).train);
  SyntheticSpec s;
  s.dim = 4;
  EXPECT_EQ(generate_synthetic(s).warnings.size(), 1u);
  s.identities = 0;
  EXPECT_ERRC(generate_synthetic(s), Errc::InvalidConfig);
}

TEST(DatasetIo, RoundTripIsBitExact) {
  auto d = generate_synthetic({}).train;
  d.identities[3] = std::nullopt;
  d.features(0, 0) = 1e-300;
  d.features(1, 1) = -0.1;
  std::stringstream ss;
  write_dataset(ss, d);
  EXPECT_EQ(read_dataset(ss), d);
}

TEST(DatasetIo, SaveLoadFile) {
  const auto path = (std::filesystem::temp_directory_path() / "reid_io_test.txt").string();
  const auto d = generate_synthetic({}).query;
  save_dataset(d, path);
  EXPECT_EQ(load_dataset(path), d);
  std::filesystem::remove(path);
  EXPECT_ERRC(load_dataset(path), Errc::IoError);
}

TEST(DatasetIo, MixedDimensionsReportLine) {
  const auto msg = parse_error_message(header(2, 2, 1) + "a 0 0 1 2\nb 0 0 1 2 3\n");
  EXPECT_NE(msg.find("line 7"), std::string::npos) << msg;
}

TEST(DatasetIo, EmptyInput) {
  std::istringstream empty("");
  EXPECT_ERRC(read_dataset(empty), Errc::EmptyDataset);
  std::istringstream none(header(2, 0, 1));
  EXPECT_ERRC(read_dataset(none), Errc::EmptyDataset);
}

TEST(DatasetIo, DuplicateId) {
  std::istringstream is(header(1, 2, 1) + "a 0 0 1\na 1 0 2\n");
  EXPECT_ERRC(read_dataset(is), Errc::DuplicateId);
}

TEST(DatasetIo, MalformedFields) {
  parse_error_message("reid-embeddings 2\n");
  parse_error_message(header(1, 1, 1) + "a x 0 1\n");
  parse_error_message(header(1, 1, 1) + "a 0 3 1\n");
  parse_error_message(header(1, 1, 1) + "a 0 0 abc\n");
  parse_error_message(header(1, 2, 1) + "a 0 0 1\n");
  parse_error_message(header(1, 1, 1) + "a 0 0 1\nextra\n");
}

TEST(Config, WriteParseRoundTrip) {
  TrainConfig c;
  c.epochs = 3;
  c.cluster.eps = 0.45;
  c.temperatures.cross = 0.123456789012345;
  c.memory = MemoryMode::Agnostic;
  c.consistency = ConsistencyMode::StrongStrong;
  c.labels = LabelSource::Oracle;
  c.seed = 18446744073709551615ULL;
  std::stringstream ss;
  write_config(ss, c);
  EXPECT_EQ(parse_config(ss, TrainConfig{}), c);
}

TEST(Config, EveryKeyListedOnce) {
  std::set<std::string> names;
  for (const auto& k : config_keys()) EXPECT_TRUE(names.insert(k.name).second) << k.name;
  for (auto name : {"epochs", "iterations", "tau.agnostic", "tau.cross", "tau.hard", "tau.soft", "lambda.hard",
                    "lambda.soft", "cluster.k1", "cluster.eps", "cluster.min_samples", "alpha", "optim.lr", "n_neg",
                    "memory", "negatives", "consistency", "labels", "seed"}) {
    EXPECT_TRUE(names.count(name)) << name;
  }
}

TEST(Config, DefaultsMatchTrainingSettings) {
  const TrainConfig c;
  EXPECT_EQ(c.optimizer.base_lr, 0.00035);
  EXPECT_EQ(c.optimizer.weight_decay, 0.0005);
  EXPECT_EQ(c.optimizer.warmup_epochs, 10);
  EXPECT_EQ(c.batch.identities, 8);
  EXPECT_EQ(c.batch.instances, 4);
  EXPECT_EQ(c.temperatures.agnostic, 0.5);
  EXPECT_EQ(c.temperatures.cross, 0.07);
  EXPECT_EQ(c.temperatures.hard, 0.1);
  EXPECT_EQ(c.temperatures.soft, 0.4);
  EXPECT_EQ(c.weights.hard, 1.0);
  EXPECT_EQ(c.weights.soft, 10.0);
  EXPECT_EQ(c.n_neg, 50);
  EXPECT_EQ(c.cluster.k1, 30);
  EXPECT_EQ(c.cluster.eps, 0.55);
  EXPECT_EQ(c.cluster.min_samples, 4);
  EXPECT_EQ(EncoderPair{}.alpha, 0.999);
}

TEST(Config, CommentsBlankLinesAndErrors) {
  std::istringstream ok("# comment\n\n  epochs = 7   # trailing\nmemory=agnostic\n");
  const auto c = parse_config(ok, TrainConfig{});
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.memory, MemoryMode::Agnostic);
  std::istringstream unknown("bogus = 1\n");
  EXPECT_ERRC(parse_config(unknown, TrainConfig{}), Errc::ParseError);
  std::istringstream bad_value("epochs = many\n");
  EXPECT_ERRC(parse_config(bad_value, TrainConfig{}), Errc::ParseError);
  std::istringstream bad_choice("memory = sometimes\n");
  EXPECT_ERRC(parse_config(bad_choice, TrainConfig{}), Errc::ParseError);
  std::istringstream no_eq("epochs 3\n");
  EXPECT_ERRC(parse_config(no_eq, TrainConfig{}), Errc::ParseError);
}

TEST(Config, SeedFromEnvironment) {
  ::setenv(kSeedEnvVar, "99", 1);
  EXPECT_EQ(default_config().seed, 99u);
  ::setenv(kSeedEnvVar, "x", 1);
  EXPECT_ERRC(default_config(), Errc::ParseError);
  ::unsetenv(kSeedEnvVar);
  EXPECT_EQ(default_config().seed, TrainConfig{}.seed);
}

TEST(Manifest, RoundTrip) {
  Manifest m;
  m.config.epochs = 2;
  m.config.seed = 5;
  m.train_path = "data/train.txt";
  m.query_path = "data/query.txt";
  m.gallery_path = "data/gallery.txt";
  std::stringstream ss;
  write_manifest(ss, m);
  const auto back = read_manifest(ss, TrainConfig{});
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.train_path, m.train_path);
  EXPECT_EQ(back.gallery_path, m.gallery_path);
  std::istringstream bad("train = a\nwhatever = b\n");
  EXPECT_ERRC(read_manifest(bad, TrainConfig{}), Errc::ParseError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TrainConfig c;
  c.hidden = 7;
  c.output = 5;
  auto state = init_state(c, 6);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for_each_tensor([&](auto& t) { for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = g(rng) * 1e-3; },
                  state.optimizer.first_moment);
  for_each_tensor([&](auto& t) { for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = std::abs(g(rng)) * 1e-7; },
                  state.optimizer.second_moment);
  state.pair.momentum.weights.b1[2] = 1.0 / 3.0;
  state.optimizer.step = 1234;
  const Checkpoint ck{state, 17};
  std::stringstream ss;
  write_checkpoint(ss, ck);
  EXPECT_EQ(read_checkpoint(ss), ck);
}

TEST(Checkpoint, RejectsDamage) {
  TrainConfig c;
  c.hidden = 3;
  c.output = 2;
  std::stringstream ss;
  write_checkpoint(ss, {init_state(c, 4), 0});
  const std::string good = ss.str();
  auto fails = [](const std::string& text) {
    std::istringstream is(text);
    return testing_util::error_of([&] { read_checkpoint(is); });
  };
  EXPECT_EQ(fails(good.substr(0, good.size() / 2)), Errc::ParseError);
  std::string wrong_version = good;
  wrong_version.replace(wrong_version.find(" 1\n"), 3, " 9\n");
  EXPECT_EQ(fails(wrong_version), Errc::ParseError);
  std::string wrong_shape = good;
  wrong_shape.replace(wrong_shape.find("shape 4 3 2"), 11, "shape 4 3 3");
  EXPECT_EQ(fails(wrong_shape), Errc::ParseError);
}
