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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reid/checkpoint.hpp"
#include "reid/config.hpp"
#include "reid/dataset.hpp"
#include "reid/experiments.hpp"
#include "reid/metrics.hpp"
#include "reid/trainer.hpp"

namespace fs = std::filesystem;
using namespace reid;

namespace {

constexpr int kUsageExit = 2;
constexpr int kRuntimeExit = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_spec_options(CLI::App& app, SyntheticSpec& spec) {
  app.add_option("--identities", spec.identities, "identities per split")->capture_default_str();
  app.add_option("--cameras", spec.cameras, "camera count")->capture_default_str();
  app.add_option("--samples-per-camera", spec.samples_per_camera, "samples per identity and camera")
      ->capture_default_str();
  app.add_option("--dim", spec.dim, "feature dimension")->capture_default_str();
  app.add_option("--dispersion", spec.dispersion, "norm of identity centers")->capture_default_str();
  app.add_option("--sigma-id", spec.sigma_id, "expected norm of sample noise")->capture_default_str();
  app.add_option("--sigma-cam", spec.sigma_cam, "expected norm of camera offsets")->capture_default_str();
  app.add_option("--data-seed", spec.seed, "generator seed")->capture_default_str();
}

/// Every config key becomes --<key>; values are applied after --config/--manifest.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App& app, const TrainConfig& defaults) {
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    for (const auto& k : config_keys()) {
      auto* opt = app.add_option_function<std::string>(
          "--" + k.name, [this, name = k.name](const std::string& v) { overrides[name] = v; }, k.help);
      opt->default_str(k.get(defaults));
    }
  }

  TrainConfig resolve(TrainConfig base) const {
    if (!config_path.empty()) base = load_config(config_path, base);
    for (const auto& [k, v] : overrides) set_config_value(base, k, v);
    base.validate();
    return base;
  }
};

EmbeddingDataset load_existing(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  return load_dataset(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  require(static_cast<bool>(os), Errc::IoError, "cannot write " + path.string());
  os << text;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// generate ------------------------------------------------------------------

struct GenerateArgs {
  SyntheticSpec spec;
  std::string out = "data";
};

int run_generate(const GenerateArgs& a) {
  const auto data = generate_synthetic(a.spec);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  save_dataset(data.train, (dir / "train.txt").string());
  save_dataset(data.query, (dir / "query.txt").string());
  save_dataset(data.gallery, (dir / "gallery.txt").string());
  std::cout << "train " << data.train.size() << " query " << data.query.size() << " gallery "
            << data.gallery.size() << " -> " << dir.string() << '\n';
  return 0;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  ConfigFlags flags;
  std::string manifest;
  std::string train_path;
  std::string query_path;
  std::string gallery_path;
  std::string out = "run";
  bool dump_clusters = false;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  Manifest m;
  TrainConfig base = default_config();
  if (!a.manifest.empty()) {
    std::ifstream is(a.manifest);
    if (!is) throw UsageError("no such file: " + a.manifest);
    m = read_manifest(is, base);
    base = m.config;
  }
  m.config = a.flags.resolve(base);
  if (!a.train_path.empty()) m.train_path = a.train_path;
  if (!a.query_path.empty()) m.query_path = a.query_path;
  if (!a.gallery_path.empty()) m.gallery_path = a.gallery_path;
  if (m.train_path.empty()) throw UsageError("train needs --train or a manifest naming one");
  if (m.query_path.empty() != m.gallery_path.empty()) {
    throw UsageError("--query and --gallery must be given together");
  }

  const auto train_set = load_existing(m.train_path);
  std::optional<EmbeddingDataset> query, gallery;
  if (!m.query_path.empty()) {
    query = load_existing(m.query_path);
    gallery = load_existing(m.gallery_path);
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "manifest.cfg");
    require(static_cast<bool>(os), Errc::IoError, "cannot write manifest");
    write_manifest(os, m);
  }

  std::ofstream csv(dir / "metrics.csv");
  require(static_cast<bool>(csv), Errc::IoError, "cannot write metrics.csv");
  csv << kMetricsHeader << '\n';

  TrainHooks hooks;
  hooks.on_warning = [&](const std::string& w) {
    if (!a.quiet) std::cerr << "warning: " << w << '\n';
  };
  hooks.on_epoch = [&](const EpochReport& r) {
    csv << metrics_row(r) << '\n' << std::flush;
    if (a.quiet) return;
    std::cout << "epoch " << r.epoch << "  clusters " << r.cluster_count << "  outliers " << r.outlier_count
              << "  loss " << fixed(r.total) << "  kl " << fixed(r.mean_kl);
    if (r.eval) std::cout << "  mAP " << fixed(r.eval->mAP) << "  rank1 " << fixed(r.eval->rank1());
    std::cout << '\n';
  };
  hooks.on_checkpoint = [&](const TrainState& s, int epoch) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_%03d.txt", epoch);
    save_checkpoint({s, epoch}, (dir / name).string());
  };
  if (a.dump_clusters) {
    hooks.on_cluster = [&](int epoch, const FeatureMatrix&, const PseudoLabelResult& r) {
      char name[64];
      std::snprintf(name, sizeof(name), "clusters_%03d.txt", epoch);
      std::ofstream os(dir / name);
      for (std::size_t i = 0; i < r.assignment.labels.size(); ++i) {
        os << train_set.sample_ids[i] << ' ' << r.assignment.labels[i] << '\n';
      }
    };
  }

  EvalSets eval;
  if (query) eval = {&*query, &*gallery};
  const auto result = train(m.config, train_set, eval, hooks);
  save_checkpoint({result.state, m.config.epochs - 1}, (dir / "model.txt").string());

  std::ofstream diag(dir / "diagnostics.csv");
  write_diagnostics(diag, diagnostics(result.reports));
  if (!result.reports.empty() && result.reports.back().eval) {
    std::ofstream os(dir / "eval.txt");
    write_eval_report(os, *result.reports.back().eval);
  }
  return 0;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string query_path;
  std::string gallery_path;
};

int run_eval(const EvalArgs& a) {
  if (!fs::exists(a.checkpoint)) throw UsageError("no such file: " + a.checkpoint);
  const auto ck = load_checkpoint(a.checkpoint);
  const auto query = load_existing(a.query_path);
  const auto gallery = load_existing(a.gallery_path);
  const auto& model = ck.state.pair.momentum;
  require(model.shape().input == static_cast<int>(query.dim()), Errc::DimensionMismatch,
          "checkpoint expects " + std::to_string(model.shape().input) + "-d inputs");
  write_eval_report(std::cout, evaluate(embed_for_retrieval(model, query), embed_for_retrieval(model, gallery)));
  return 0;
}

// ablate --------------------------------------------------------------------

struct AblateArgs {
  ConfigFlags flags;
  SyntheticSpec spec;
  int seeds = 5;
  std::uint64_t first_seed = 1;
  std::string csv_path;
};

int run_ablate(const AblateArgs& a) {
  if (a.seeds < 1) throw UsageError("--seeds must be positive");
  const auto config = a.flags.resolve(default_config());
  const auto seeds = seed_range(a.first_seed, a.seeds);
  std::cout << pad("memory", 10) << pad("losses", 10) << pad("mAP", 9) << pad("clusters", 10) << "KL\n";
  const auto rows = run_ablation(config, a.spec, seeds, [](const AblationRow& r) {
    std::cout << pad(detail::enum_name(r.memory, detail::kMemoryNames), 10) << pad(variant_name(r.variant), 10)
              << pad(fixed(r.summary.median_map), 9) << pad(fixed(r.summary.median_clusters, 1), 10)
              << fixed(r.summary.median_kl) << std::endl;
  });
  if (!a.csv_path.empty()) {
    std::ostringstream os;
    os << "memory,losses,seed,final_mAP,final_clusters,final_KL\n";
    for (const auto& r : rows) {
      for (const auto& run : r.summary.runs) {
        os << detail::enum_name(r.memory, detail::kMemoryNames) << ',' << variant_name(r.variant) << ',' << run.seed
           << ',' << format_double(run.final_map()) << ',' << run.last().cluster_count << ','
           << format_double(run.last().mean_kl) << '\n';
      }
    }
    write_text(a.csv_path, os.str());
  }
  return 0;
}

// sweep-eps -----------------------------------------------------------------

struct SweepArgs {
  ConfigFlags flags;
  SyntheticSpec spec;
  std::string train_path;
  std::string checkpoint;
};

int run_sweep(const SweepArgs& a) {
  const auto config = a.flags.resolve(default_config());
  EmbeddingDataset data;
  if (a.train_path.empty()) {
    data = generate_synthetic(a.spec).train;
  } else {
    data = load_existing(a.train_path);
  }
  EncoderPair pair;
  if (a.checkpoint.empty()) {
    pair = init_state(config, static_cast<int>(data.dim())).pair;
  } else {
    if (!fs::exists(a.checkpoint)) throw UsageError("no such file: " + a.checkpoint);
    pair = load_checkpoint(a.checkpoint).state.pair;
  }
  const auto bank = extract_bank(pair, data.features);
  std::cout << pad("eps", 8) << pad("clusters", 10) << "outliers\n";
  for (const auto& r : sweep_eps(bank, config.cluster)) {
    std::cout << pad(fixed(r.eps, 2), 8) << pad(std::to_string(r.cluster_count), 10) << r.outlier_count << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised contrastive re-identification on embedding data"};
  app.require_subcommand(1);
  const TrainConfig defaults = default_config();

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a synthetic train/query/gallery split");
  add_spec_options(*g, gen.spec);
  g->add_option("--out", gen.out, "output directory")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train an encoder and write checkpoints and metrics");
  t->add_option("--manifest", tr.manifest, "rerun from a manifest written by a previous run");
  t->add_option("--train", tr.train_path, "training dataset");
  t->add_option("--query", tr.query_path, "query dataset for evaluation");
  t->add_option("--gallery", tr.gallery_path, "gallery dataset for evaluation");
  t->add_option("--out", tr.out, "output directory")->capture_default_str();
  t->add_flag("--dump-clusters", tr.dump_clusters, "write pseudo labels for every epoch");
  t->add_flag("--quiet", tr.quiet, "no per-epoch output");
  tr.flags.attach(*t, defaults);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint's momentum encoder");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  e->add_option("--query", ev.query_path, "query dataset")->required();
  e->add_option("--gallery", ev.gallery_path, "gallery dataset")->required();

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "loss-term ablation in both memory modes, median over seeds");
  add_spec_options(*a, ab.spec);
  a->add_option("--seeds", ab.seeds, "number of seeds")->capture_default_str();
  a->add_option("--first-seed", ab.first_seed, "first seed")->capture_default_str();
  a->add_option("--csv", ab.csv_path, "per-seed results");
  ab.flags.attach(*a, defaults);

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep-eps", "cluster counts over the eps grid on one bank");
  add_spec_options(*s, sw.spec);
  s->add_option("--train", sw.train_path, "dataset (default: synthetic benchmark)");
  s->add_option("--checkpoint", sw.checkpoint, "encoder checkpoint (default: untrained encoder)");
  sw.flags.attach(*s, defaults);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsageExit;
  }

  try {
    if (*g) return run_generate(gen);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*a) return run_ablate(ab);
    if (*s) return run_sweep(sw);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsageExit;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return err.code() == Errc::IoError || err.code() == Errc::ParseError ? kUsageExit : kRuntimeExit;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRuntimeExit;
  }
  return kUsageExit;
}
