// Copyright 2026 The RankOOD Authors. All rights reserved.
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

// Pipeline driver. Each subcommand runs one stage and persists its outputs
// under the output root, so any stage can be rerun from the artifacts of the
// previous one:
//
//   synth -> data/        train-ce -> ce/        rpm -> rpm/
//   canon -> canon/       train-rank -> rank/    profile -> profile/
//   score -> score/       eval -> eval/
//
// Every stage writes the fully resolved configuration it ran with to
// <stage>/config.json. All outputs are deterministic byte-for-byte for a
// fixed configuration. Exit codes: 0 success, 2 validation or format or io
// failure, 3 missing or stale upstream artifact, 4 numeric failure.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rankood/canonical_ranks.hpp"
#include "rankood/errors.hpp"
#include "rankood/metrics_eval.hpp"
#include "rankood/numeric.hpp"
#include "rankood/ood_scoring.hpp"
#include "rankood/rank_stats.hpp"
#include "rankood/tensor_io.hpp"
#include "rankood/toy_trainer.hpp"

namespace fs = std::filesystem;
using namespace rankood;

namespace {

std::string schedule_to_string(LrSchedule schedule) {
  return schedule == LrSchedule::cosine ? "cosine" : "constant";
}

LrSchedule schedule_from_string(const std::string& name) {
  if (name == "cosine") return LrSchedule::cosine;
  if (name == "constant") return LrSchedule::constant;
  throw ValidationError("unknown learning-rate schedule '" + name +
                        "' (expected cosine or constant)");
}

// Everything a full pipeline run needs, serializable as one JSON document.
struct PipelineConfig {
  SyntheticSpec synth;
  TrainConfig train;
  std::vector<int> hidden = {32};
  double percentile = 0.95;
  double gamma = 1.5;
  double tpr = 0.95;
  std::string out = "rankood_out";
};

nlohmann::json config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["synth"] = {{"classes", cfg.synth.n_classes},
                {"dim", cfg.synth.feature_dim},
                {"samples_per_class", cfg.synth.samples_per_class},
                {"class_similarity", cfg.synth.class_similarity},
                {"ood_shift", cfg.synth.ood_shift},
                {"ood_mode", to_string(cfg.synth.ood_mode)},
                {"seed", cfg.synth.seed}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"learning_rate", cfg.train.learning_rate},
                {"momentum", cfg.train.momentum},
                {"schedule", schedule_to_string(cfg.train.schedule)},
                {"alpha", cfg.train.alpha},
                {"subset_mode", to_string(cfg.train.subset_mode)},
                {"subset_n", cfg.train.subset_n},
                {"warm_start", cfg.train.warm_start},
                {"seed", cfg.train.seed}};
  j["hidden"] = cfg.hidden;
  j["percentile"] = cfg.percentile;
  j["gamma"] = cfg.gamma;
  j["tpr"] = cfg.tpr;
  j["out"] = cfg.out;
  return j;
}

// Absent keys keep their current values, so partial config files work.
void config_from_json(const nlohmann::json& j, PipelineConfig& cfg) {
  try {
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      cfg.synth.n_classes = s.value("classes", cfg.synth.n_classes);
      cfg.synth.feature_dim = s.value("dim", cfg.synth.feature_dim);
      cfg.synth.samples_per_class =
          s.value("samples_per_class", cfg.synth.samples_per_class);
      cfg.synth.class_similarity =
          s.value("class_similarity", cfg.synth.class_similarity);
      cfg.synth.ood_shift = s.value("ood_shift", cfg.synth.ood_shift);
      if (s.contains("ood_mode")) {
        cfg.synth.ood_mode =
            ood_mode_from_string(s.at("ood_mode").get<std::string>());
      }
      cfg.synth.seed = s.value("seed", cfg.synth.seed);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      cfg.train.epochs = t.value("epochs", cfg.train.epochs);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.learning_rate =
          t.value("learning_rate", cfg.train.learning_rate);
      cfg.train.momentum = t.value("momentum", cfg.train.momentum);
      if (t.contains("schedule")) {
        cfg.train.schedule =
            schedule_from_string(t.at("schedule").get<std::string>());
      }
      cfg.train.alpha = t.value("alpha", cfg.train.alpha);
      if (t.contains("subset_mode")) {
        cfg.train.subset_mode =
            subset_mode_from_string(t.at("subset_mode").get<std::string>());
      }
      cfg.train.subset_n = t.value("subset_n", cfg.train.subset_n);
      cfg.train.warm_start = t.value("warm_start", cfg.train.warm_start);
      cfg.train.seed = t.value("seed", cfg.train.seed);
    }
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<int>>();
    cfg.percentile = j.value("percentile", cfg.percentile);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.tpr = j.value("tpr", cfg.tpr);
    cfg.out = j.value("out", cfg.out);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config value: ") + e.what());
  }
}

void load_config_file(const fs::path& path, PipelineConfig& cfg) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad config " + path.string() + ": " + e.what());
  }
  config_from_json(j, cfg);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << content;
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

fs::path stage_dir(const PipelineConfig& cfg, const std::string& stage) {
  const fs::path dir = fs::path(cfg.out) / stage;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void echo_config(const PipelineConfig& cfg, const fs::path& dir) {
  write_text(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Upstream artifacts that fail to load are reported as dependency problems
// naming the command that produces them, not as plain validation failures.
void require_artifact(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw DependencyError("missing " + path.string() + "; run `rankood " +
                          producer + "` first");
  }
}

DatasetManifest load_upstream_manifest(const fs::path& path,
                                       const std::string& producer) {
  require_artifact(path, producer);
  try {
    return load_manifest(path, true);
  } catch (const DependencyError&) {
    throw;
  } catch (const Error& e) {
    throw DependencyError("stale artifact " + path.string() + " (" + e.what() +
                          "); rerun `rankood " + producer + "`");
  }
}

LogitMatrix load_upstream_split(const fs::path& manifest_path,
                                const DatasetManifest& manifest, SplitTag split,
                                const std::string& producer) {
  try {
    return load_split(manifest_path, manifest, split);
  } catch (const Error& e) {
    throw DependencyError("stale artifact behind " + manifest_path.string() +
                          " (" + e.what() + "); rerun `rankood " + producer +
                          "`");
  }
}

CanonicalTable load_upstream_canon(const PipelineConfig& cfg,
                                   int* num_classes_out) {
  const fs::path path = fs::path(cfg.out) / "canon" / "canonical.json";
  require_artifact(path, "canon");
  try {
    return load_canonical_table(path, num_classes_out);
  } catch (const Error& e) {
    throw DependencyError("stale artifact " + path.string() + " (" + e.what() +
                          "); rerun `rankood canon`");
  }
}

// Sized from the persisted dataset, not the config, so the training stages
// work standalone on any synth output.
MlpArchitecture make_arch(const PipelineConfig& cfg,
                          const SyntheticDataset& data) {
  MlpArchitecture arch;
  arch.input_dim = static_cast<int>(data.train.cols());
  arch.hidden = cfg.hidden;
  int n_classes = 0;
  for (Eigen::Index i = 0; i < data.train.rows(); ++i) {
    n_classes = std::max(n_classes, (*data.train.labels)(i) + 1);
  }
  arch.output_dim = n_classes;
  return arch;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,total,ce,listmle,learning_rate\n";
  for (size_t e = 0; e < history.size(); ++e) {
    const EpochStats& s = history[e];
    out += std::to_string(e) + "," + fmt(s.total) + "," + fmt(s.ce) + "," +
           fmt(s.listmle) + "," + fmt(s.learning_rate) + "\n";
  }
  return out;
}

// Runs the model over the five splits and persists the logits next to a
// manifest, mirroring the data directory layout.
void emit_logits(const ModelParams& model, const SyntheticDataset& data,
                 const fs::path& dir, uint64_t seed) {
  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.notes = "model logits";
  const std::pair<const LogitMatrix*, const char*> splits[] = {
      {&data.train, "logits_train.rkod"},
      {&data.val_id, "logits_val_id.rkod"},
      {&data.val_ood, "logits_val_ood.rkod"},
      {&data.test_id, "logits_test_id.rkod"},
      {&data.test_ood, "logits_test_ood.rkod"},
  };
  for (const auto& [split, name] : splits) {
    const LogitMatrix logits = model_logits(model, *split);
    ManifestEntry entry;
    entry.path = name;
    entry.split = logits.split;
    entry.n_samples = logits.rows();
    entry.n_classes = static_cast<int>(logits.cols());
    entry.checksum = write_logits(logits, dir / name, TensorFormat::binary);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, dir / "manifest.json");
}

SyntheticDataset load_dataset(const PipelineConfig& cfg) {
  const fs::path manifest_path = fs::path(cfg.out) / "data" / "manifest.json";
  const DatasetManifest manifest =
      load_upstream_manifest(manifest_path, "synth");
  SyntheticDataset data;
  data.train = load_upstream_split(manifest_path, manifest, SplitTag::train, "synth");
  data.val_id = load_upstream_split(manifest_path, manifest, SplitTag::val_id, "synth");
  data.val_ood = load_upstream_split(manifest_path, manifest, SplitTag::val_ood, "synth");
  data.test_id = load_upstream_split(manifest_path, manifest, SplitTag::test_id, "synth");
  data.test_ood = load_upstream_split(manifest_path, manifest, SplitTag::test_ood, "synth");
  return data;
}

void run_synth(const PipelineConfig& cfg) {
  cfg.synth.validate();
  const fs::path dir = stage_dir(cfg, "data");
  const SyntheticDataset data = generate_synthetic(cfg.synth);

  DatasetManifest manifest;
  manifest.seed = cfg.synth.seed;
  manifest.notes = "synthetic gaussian clusters";
  const std::pair<const LogitMatrix*, const char*> splits[] = {
      {&data.train, "train.rkod"},       {&data.val_id, "val_id.rkod"},
      {&data.val_ood, "val_ood.rkod"},   {&data.test_id, "test_id.rkod"},
      {&data.test_ood, "test_ood.rkod"},
  };
  for (const auto& [split, name] : splits) {
    ManifestEntry entry;
    entry.path = name;
    entry.split = split->split;
    entry.n_samples = split->rows();
    entry.n_classes = static_cast<int>(split->cols());
    entry.checksum = write_logits(*split, dir / name, TensorFormat::binary);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, dir / "manifest.json");
  echo_config(cfg, dir);
  std::cout << "wrote " << manifest.entries.size() << " splits to "
            << dir.string() << "\n";
}

void run_train_ce(const PipelineConfig& cfg) {
  cfg.train.validate();
  const SyntheticDataset data = load_dataset(cfg);
  const fs::path dir = stage_dir(cfg, "ce");

  TrainConfig ce_config = cfg.train;
  ce_config.alpha = 0.0;
  ce_config.seed = derive_seed(cfg.train.seed, 2);
  const TrainResult result =
      train(init_model(make_arch(cfg, data), derive_seed(cfg.train.seed, 1)),
            data.train, nullptr, ce_config);

  save_model(result.model, dir / "model");
  write_text(dir / "history.csv", history_csv(result.history));
  emit_logits(result.model, data, dir, cfg.train.seed);
  echo_config(cfg, dir);
  std::cout << "cross-entropy model: train accuracy "
            << fmt(accuracy(result.model, data.train)) << ", test accuracy "
            << fmt(accuracy(result.model, data.test_id)) << "\n";
}

void run_rpm(const PipelineConfig& cfg) {
  const fs::path ce_manifest = fs::path(cfg.out) / "ce" / "manifest.json";
  const DatasetManifest manifest =
      load_upstream_manifest(ce_manifest, "train-ce");
  const LogitMatrix train_logits =
      load_upstream_split(ce_manifest, manifest, SplitTag::train, "train-ce");

  const int c = static_cast<int>(train_logits.cols());
  const std::vector<RankProbabilityMatrix> rpms =
      compute_all_rpms(train_logits, c - 1);

  const fs::path dir = stage_dir(cfg, "rpm");
  nlohmann::json index;
  index["n_classes"] = c;
  index["k"] = c - 1;
  std::vector<std::string> files;
  for (const RankProbabilityMatrix& rpm : rpms) {
    char name[32];
    std::snprintf(name, sizeof(name), "rpm_%03d.csv", rpm.predicted_class);
    save_rpm_csv(rpm, dir / name);
    files.emplace_back(name);
  }
  index["files"] = files;
  write_text(dir / "index.json", index.dump(2) + "\n");
  echo_config(cfg, dir);
  std::cout << "wrote " << files.size() << " rank probability matrices to "
            << dir.string() << "\n";
}

void run_canon(const PipelineConfig& cfg) {
  const fs::path index_path = fs::path(cfg.out) / "rpm" / "index.json";
  require_artifact(index_path, "rpm");

  std::vector<RankProbabilityMatrix> rpms;
  int n_classes = 0;
  try {
    std::ifstream f(index_path, std::ios::binary);
    if (!f) throw IoError("cannot open " + index_path.string());
    nlohmann::json index;
    f >> index;
    n_classes = index.at("n_classes").get<int>();
    for (const auto& name : index.at("files")) {
      rpms.push_back(
          load_rpm_csv(fs::path(cfg.out) / "rpm" / name.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DependencyError("stale artifact " + index_path.string() + " (" +
                          e.what() + "); rerun `rankood rpm`");
  } catch (const Error& e) {
    throw DependencyError(std::string("stale rank probability matrices (") +
                          e.what() + "); rerun `rankood rpm`");
  }

  const CanonicalTable table = solve_all(rpms);
  const fs::path dir = stage_dir(cfg, "canon");
  save_canonical_table(table, n_classes, dir / "canonical.json");
  echo_config(cfg, dir);
  std::cout << "solved canonical rankings for " << table.size()
            << " classes\n";
}

void run_train_rank(const PipelineConfig& cfg) {
  cfg.train.validate();
  const SyntheticDataset data = load_dataset(cfg);
  const CanonicalTable canon = load_upstream_canon(cfg, nullptr);
  const fs::path dir = stage_dir(cfg, "rank");

  ModelParams init;
  if (cfg.train.warm_start) {
    const fs::path model_dir = fs::path(cfg.out) / "ce" / "model";
    require_artifact(model_dir / "arch.json", "train-ce");
    try {
      init = load_model(model_dir);
    } catch (const Error& e) {
      throw DependencyError("stale artifact " + model_dir.string() + " (" +
                            e.what() + "); rerun `rankood train-ce`");
    }
  } else {
    init = init_model(make_arch(cfg, data), derive_seed(cfg.train.seed, 3));
  }

  TrainConfig rank_config = cfg.train;
  rank_config.seed = derive_seed(cfg.train.seed, 4);
  const TrainResult result = train(std::move(init), data.train, &canon,
                                   rank_config);

  save_model(result.model, dir / "model");
  write_text(dir / "history.csv", history_csv(result.history));
  emit_logits(result.model, data, dir, cfg.train.seed);
  echo_config(cfg, dir);
  std::cout << "rank-trained model: train accuracy "
            << fmt(accuracy(result.model, data.train)) << ", test accuracy "
            << fmt(accuracy(result.model, data.test_id)) << "\n";
}

void run_profile(const PipelineConfig& cfg) {
  const CanonicalTable canon = load_upstream_canon(cfg, nullptr);
  const fs::path rank_manifest = fs::path(cfg.out) / "rank" / "manifest.json";
  const DatasetManifest manifest =
      load_upstream_manifest(rank_manifest, "train-rank");
  const LogitMatrix train_logits = load_upstream_split(
      rank_manifest, manifest, SplitTag::train, "train-rank");

  const ThresholdProfile profile =
      build_profile(train_logits, canon, cfg.percentile);
  const fs::path dir = stage_dir(cfg, "profile");
  save_profile(profile, dir / "profile.json");
  echo_config(cfg, dir);
  std::cout << "profiled " << profile.per_class.size()
            << " classes at percentile " << fmt(profile.percentile)
            << " (min matching " << profile.min_matching << ")\n";
}

MatrixD feature_matrix(const LogitMatrix& logits, const CanonicalTable& canon,
                       const ThresholdProfile& profile, double gamma) {
  MatrixD out(logits.rows(), profile.k + 1);
  for (Eigen::Index n = 0; n < logits.rows(); ++n) {
    const VectorD row = logits.data.row(n).transpose().cast<double>();
    out.row(n) = score_features(row, canon, profile, gamma).transpose();
  }
  return out;
}

std::string scores_csv(const VectorD& rank_scores, const VectorD& msp_scores) {
  std::string out = "index,rankood,msp\n";
  for (Eigen::Index i = 0; i < rank_scores.size(); ++i) {
    out += std::to_string(i) + "," + fmt(rank_scores(i)) + "," +
           fmt(msp_scores(i)) + "\n";
  }
  return out;
}

void run_score(const PipelineConfig& cfg) {
  const CanonicalTable canon = load_upstream_canon(cfg, nullptr);

  const fs::path profile_path = fs::path(cfg.out) / "profile" / "profile.json";
  require_artifact(profile_path, "profile");
  ThresholdProfile profile;
  try {
    profile = load_profile(profile_path);
  } catch (const Error& e) {
    throw DependencyError("stale artifact " + profile_path.string() + " (" +
                          e.what() + "); rerun `rankood profile`");
  }

  const fs::path rank_manifest = fs::path(cfg.out) / "rank" / "manifest.json";
  const DatasetManifest manifest =
      load_upstream_manifest(rank_manifest, "train-rank");
  const auto split = [&](SplitTag tag) {
    return load_upstream_split(rank_manifest, manifest, tag, "train-rank");
  };

  // Weights come from the validation splits; tests are scored with them.
  const RankWeights weights = fit_weights(
      feature_matrix(split(SplitTag::val_id), canon, profile, cfg.gamma),
      feature_matrix(split(SplitTag::val_ood), canon, profile, cfg.gamma));

  const fs::path dir = stage_dir(cfg, "score");
  save_weights(weights, dir / "weights.json");

  const std::pair<SplitTag, const char*> targets[] = {
      {SplitTag::test_id, "scores_test_id.csv"},
      {SplitTag::test_ood, "scores_test_ood.csv"},
  };
  for (const auto& [tag, name] : targets) {
    const LogitMatrix logits = split(tag);
    VectorD rank_scores(logits.rows());
    VectorD msp_scores(logits.rows());
    for (Eigen::Index n = 0; n < logits.rows(); ++n) {
      const VectorD row = logits.data.row(n).transpose().cast<double>();
      rank_scores(n) = rankood_score(row, canon, profile, weights, cfg.gamma);
      msp_scores(n) = msp_score(row);
    }
    write_text(dir / name, scores_csv(rank_scores, msp_scores));
  }
  echo_config(cfg, dir);
  std::cout << "fitted rank weights (r^2 " << fmt(weights.fit.r_squared)
            << (weights.fit.ridge_fallback ? ", ridge fallback" : "")
            << ") and scored the test splits\n";
}

// Columns rankood and msp of one scores CSV.
std::pair<VectorD, VectorD> read_scores_csv(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line.rfind("index,rankood,msp", 0) != 0) {
    throw FormatError("bad scores header in " + path.string());
  }
  std::vector<double> rank_scores;
  std::vector<double> msp_scores;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const size_t c1 = line.find(',');
    const size_t c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw FormatError("bad scores row in " + path.string() + ": " + line);
    }
    double rank_value = 0.0;
    double msp_value = 0.0;
    const char* begin1 = line.data() + c1 + 1;
    const char* begin2 = line.data() + c2 + 1;
    const auto r1 = std::from_chars(begin1, line.data() + c2, rank_value);
    const auto r2 =
        std::from_chars(begin2, line.data() + line.size(), msp_value);
    if (r1.ec != std::errc() || r2.ec != std::errc()) {
      throw FormatError("bad scores row in " + path.string() + ": " + line);
    }
    rank_scores.push_back(rank_value);
    msp_scores.push_back(msp_value);
  }
  VectorD rank_vec(static_cast<Eigen::Index>(rank_scores.size()));
  VectorD msp_vec(static_cast<Eigen::Index>(msp_scores.size()));
  for (size_t i = 0; i < rank_scores.size(); ++i) {
    rank_vec(static_cast<Eigen::Index>(i)) = rank_scores[i];
    msp_vec(static_cast<Eigen::Index>(i)) = msp_scores[i];
  }
  return {std::move(rank_vec), std::move(msp_vec)};
}

nlohmann::json report_to_json(const ScoreReport& report, double tpr) {
  return {{"detector", report.detector}, {"n_id", report.n_id},
          {"n_ood", report.n_ood},       {"auroc", report.auroc},
          {"fpr95", report.fpr95},       {"threshold", report.threshold},
          {"tpr", tpr}};
}

void run_eval(const PipelineConfig& cfg) {
  if (!(cfg.tpr > 0.0 && cfg.tpr <= 1.0)) {
    throw ValidationError("tpr must lie in (0, 1]");
  }
  const fs::path score_dir = fs::path(cfg.out) / "score";
  require_artifact(score_dir / "scores_test_id.csv", "score");
  require_artifact(score_dir / "scores_test_ood.csv", "score");
  std::pair<VectorD, VectorD> id_scores;
  std::pair<VectorD, VectorD> ood_scores;
  try {
    id_scores = read_scores_csv(score_dir / "scores_test_id.csv");
    ood_scores = read_scores_csv(score_dir / "scores_test_ood.csv");
  } catch (const Error& e) {
    throw DependencyError(std::string("stale scores (") + e.what() +
                          "); rerun `rankood score`");
  }

  const auto report_for = [&](const std::string& name, const VectorD& id,
                              const VectorD& ood) {
    ScoreReport report;
    report.detector = name;
    report.n_id = id.size();
    report.n_ood = ood.size();
    report.auroc = auroc(id, ood);
    const FprResult fpr = fpr_at_tpr(id, ood, cfg.tpr);
    report.fpr95 = fpr.fpr;
    report.threshold = fpr.threshold;
    return report;
  };
  const ScoreReport rank_report =
      report_for("rankood", id_scores.first, ood_scores.first);
  const ScoreReport msp_report =
      report_for("msp", id_scores.second, ood_scores.second);

  const fs::path dir = stage_dir(cfg, "eval");
  write_text(dir / "report_rankood.json",
             report_to_json(rank_report, cfg.tpr).dump(2) + "\n");
  write_text(dir / "report_msp.json",
             report_to_json(msp_report, cfg.tpr).dump(2) + "\n");
  {
    std::ostringstream csv;
    write_reports_csv({rank_report, msp_report}, csv);
    write_text(dir / "reports.csv", csv.str());
  }

  // Rank-consistency diagnostics from the rank model's test logits.
  const CanonicalTable canon = load_upstream_canon(cfg, nullptr);
  const fs::path rank_manifest = fs::path(cfg.out) / "rank" / "manifest.json";
  const DatasetManifest manifest =
      load_upstream_manifest(rank_manifest, "train-rank");
  const LogitMatrix test_id = load_upstream_split(
      rank_manifest, manifest, SplitTag::test_id, "train-rank");
  const LogitMatrix test_ood = load_upstream_split(
      rank_manifest, manifest, SplitTag::test_ood, "train-rank");

  const auto emit_cp = [&](const LogitMatrix& logits, const char* name) {
    std::ostringstream csv;
    write_cp_csv(cp_matrix(logits, canon), csv);
    write_text(dir / name, csv.str());
  };
  emit_cp(test_id, "cp_rank_id.csv");
  emit_cp(test_ood, "cp_rank_ood.csv");

  // The cross-entropy baseline's CP matrix, when its logits are around.
  const fs::path ce_manifest = fs::path(cfg.out) / "ce" / "manifest.json";
  if (fs::exists(ce_manifest)) {
    const DatasetManifest ce = load_upstream_manifest(ce_manifest, "train-ce");
    const LogitMatrix ce_test =
        load_upstream_split(ce_manifest, ce, SplitTag::test_id, "train-ce");
    std::ostringstream csv;
    write_cp_csv(cp_matrix(ce_test, canon), csv);
    write_text(dir / "cp_ce_id.csv", csv.str());
  }

  {
    std::vector<int> positions(static_cast<size_t>(canon.begin()->second.k()) + 1);
    std::iota(positions.begin(), positions.end(), 0);
    std::ostringstream csv;
    write_summary_csv(rank_logit_summary(test_id, positions), csv);
    write_text(dir / "rank_logit_summary.csv", csv.str());
  }

  echo_config(cfg, dir);
  std::cout << "rankood auroc " << fmt(rank_report.auroc) << ", msp auroc "
            << fmt(msp_report.auroc) << ", rankood fpr@" << fmt(cfg.tpr)
            << " " << fmt(rank_report.fpr95) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  PipelineConfig cfg;
  if (const char* env = std::getenv("RANKOOD_OUT")) cfg.out = env;

  CLI::App app{"RankOOD pipeline: rank-statistics training and "
               "out-of-distribution scoring"};
  app.require_subcommand(1);

  try {
    // Config files provide defaults, so they load before flag parsing and
    // flags override afterwards.
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        load_config_file(argv[i + 1], cfg);
      } else if (arg.rfind("--config=", 0) == 0) {
        load_config_file(arg.substr(9), cfg);
      }
    }

    std::string ood_mode_str = to_string(cfg.synth.ood_mode);
    std::string schedule_str = schedule_to_string(cfg.train.schedule);
    std::string subset_mode_str = to_string(cfg.train.subset_mode);
    std::string config_path;

    const auto add_common = [&](CLI::App* sub) {
      sub->add_option("--out", cfg.out,
                      "Output root (default from RANKOOD_OUT)")
          ->capture_default_str();
      sub->add_option("--config", config_path,
                      "JSON config file supplying defaults");
    };

    CLI::App* synth = app.add_subcommand(
        "synth", "Generate the synthetic dataset splits");
    synth->add_option("--classes", cfg.synth.n_classes)->capture_default_str();
    synth->add_option("--dim", cfg.synth.feature_dim)->capture_default_str();
    synth->add_option("--samples", cfg.synth.samples_per_class)
        ->capture_default_str();
    synth->add_option("--similarity", cfg.synth.class_similarity)
        ->capture_default_str();
    synth->add_option("--ood-shift", cfg.synth.ood_shift)
        ->capture_default_str();
    synth->add_option("--ood-mode", ood_mode_str, "near or far")
        ->capture_default_str();
    synth->add_option("--seed", cfg.synth.seed)->capture_default_str();
    add_common(synth);

    const auto add_train_flags = [&](CLI::App* sub) {
      sub->add_option("--epochs", cfg.train.epochs)->capture_default_str();
      sub->add_option("--batch-size", cfg.train.batch_size)
          ->capture_default_str();
      sub->add_option("--lr", cfg.train.learning_rate)->capture_default_str();
      sub->add_option("--momentum", cfg.train.momentum)->capture_default_str();
      sub->add_option("--schedule", schedule_str, "cosine or constant")
          ->capture_default_str();
      sub->add_option("--hidden", cfg.hidden, "Hidden layer widths")
          ->delimiter(',')
          ->capture_default_str();
      sub->add_option("--seed", cfg.train.seed)->capture_default_str();
      add_common(sub);
    };

    CLI::App* train_ce = app.add_subcommand(
        "train-ce", "Train the cross-entropy baseline and emit its logits");
    add_train_flags(train_ce);

    CLI::App* rpm_cmd = app.add_subcommand(
        "rpm", "Tally rank probability matrices from the baseline logits");
    add_common(rpm_cmd);

    CLI::App* canon_cmd = app.add_subcommand(
        "canon", "Solve the canonical class ranking of every class");
    add_common(canon_cmd);

    CLI::App* train_rank = app.add_subcommand(
        "train-rank",
        "Train with the hybrid cross-entropy plus listwise objective");
    add_train_flags(train_rank);
    train_rank->add_option("--alpha", cfg.train.alpha)->capture_default_str();
    train_rank
        ->add_option("--subset-mode", subset_mode_str,
                     "full, top, bottom, or top_bottom")
        ->capture_default_str();
    train_rank->add_option("--subset-n", cfg.train.subset_n)
        ->capture_default_str();
    train_rank->add_flag("--warm-start", cfg.train.warm_start,
                         "Start from the cross-entropy model");

    CLI::App* profile_cmd = app.add_subcommand(
        "profile", "Build per-class reference logit thresholds");
    profile_cmd->add_option("--percentile", cfg.percentile)
        ->capture_default_str();
    add_common(profile_cmd);

    CLI::App* score_cmd = app.add_subcommand(
        "score", "Fit rank weights on validation data and score the tests");
    score_cmd->add_option("--gamma", cfg.gamma, "Margin penalty base, >= 1")
        ->capture_default_str();
    add_common(score_cmd);

    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "Compare detectors and emit rank-consistency reports");
    eval_cmd->add_option("--tpr", cfg.tpr, "ID recall for the FPR threshold")
        ->capture_default_str();
    eval_cmd->add_option("--gamma", cfg.gamma)->capture_default_str();
    add_common(eval_cmd);

    synth->callback([&] {
      cfg.synth.ood_mode = ood_mode_from_string(ood_mode_str);
      run_synth(cfg);
    });
    train_ce->callback([&] {
      cfg.train.schedule = schedule_from_string(schedule_str);
      run_train_ce(cfg);
    });
    rpm_cmd->callback([&] { run_rpm(cfg); });
    canon_cmd->callback([&] { run_canon(cfg); });
    train_rank->callback([&] {
      cfg.train.schedule = schedule_from_string(schedule_str);
      cfg.train.subset_mode = subset_mode_from_string(subset_mode_str);
      run_train_rank(cfg);
    });
    profile_cmd->callback([&] { run_profile(cfg); });
    score_cmd->callback([&] { run_score(cfg); });
    eval_cmd->callback([&] { run_eval(cfg); });

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const DependencyError& e) {
    std::cerr << "rankood: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "rankood: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "rankood: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rankood: unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
