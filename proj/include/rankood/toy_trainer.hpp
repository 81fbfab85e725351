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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rankood/canonical_ranks.hpp"
#include "rankood/pl_objective.hpp"
#include "rankood/rank_stats.hpp"
#include "rankood/types.hpp"

namespace rankood {

enum class OodMode { near, far };

std::string to_string(OodMode mode);
OodMode ood_mode_from_string(const std::string& name);

// Gaussian class clusters on a blend of per-class orthogonal axes and a
// shared line direction; class_similarity = 0 gives orthogonal means,
// 1 collapses them onto the line. OOD clusters sit between adjacent class
// means (near) or away from all of them (far), displaced by ood_shift along
// axes orthogonal to every class mean.
struct SyntheticSpec {
  int n_classes = 8;
  int feature_dim = 16;
  int samples_per_class = 250;  // training split; val/test use 1/4 each
  double class_similarity = 0.5;
  double ood_shift = 2.0;
  OodMode ood_mode = OodMode::near;
  uint64_t seed = 0;

  // Requires n_classes >= 3, feature_dim >= n_classes (the per-class axes
  // must exist), similarity in [0, 1], ood_shift >= 0, and feature_dim >=
  // n_classes + 2 whenever ood_shift > 0 (the displacement axes must exist).
  void validate() const;
};

struct SyntheticDataset {
  LogitMatrix train;     // labeled feature rows
  LogitMatrix val_id;    // labeled
  LogitMatrix val_ood;   // unlabeled
  LogitMatrix test_id;   // labeled
  LogitMatrix test_ood;  // unlabeled
};

// Class mean vectors (n_classes x feature_dim); exposed so tests can verify
// the construction independently.
MatrixD synthetic_class_means(const SyntheticSpec& spec);
// OOD cluster means for the spec's mode.
MatrixD synthetic_ood_means(const SyntheticSpec& spec);

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

struct MlpArchitecture {
  int input_dim = 0;
  std::vector<int> hidden = {32};
  int output_dim = 0;

  void validate() const;  // dims >= 2 everywhere
};

// Fully connected ReLU network, double precision. weights[l] is
// (out_l x in_l), applied as x W^T + b.
struct ModelParams {
  MlpArchitecture arch;
  std::vector<MatrixD> weights;
  std::vector<VectorD> biases;

  bool finite() const;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
ModelParams init_model(const MlpArchitecture& arch, uint64_t seed);

MatrixD forward_logits(const ModelParams& model, const MatrixD& inputs);
// Runs the model over a feature container; labels and split carry through.
LogitMatrix model_logits(const ModelParams& model, const LogitMatrix& features);
double accuracy(const ModelParams& model, const LogitMatrix& features);

// Classic momentum: v <- mu v + g, theta <- theta - lr v. The first step
// with zero velocity is exactly -lr * g.
struct SgdMomentum {
  double mu = 0.9;
  std::vector<MatrixD> vel_w;
  std::vector<VectorD> vel_b;

  explicit SgdMomentum(const ModelParams& model, double momentum);
  void step(ModelParams& model, const std::vector<MatrixD>& grad_w,
            const std::vector<VectorD>& grad_b, double lr);
};

enum class LrSchedule { constant, cosine };

// eta_0 * (1 + cos(pi epoch / total)) / 2, epoch counted from zero.
double cosine_lr(double eta0, int epoch, int total_epochs);

struct TrainConfig {
  int epochs = 40;
  int batch_size = 64;
  double learning_rate = 0.1;
  double momentum = 0.9;
  LrSchedule schedule = LrSchedule::cosine;
  double alpha = 1.0;  // weight of the listwise term; 0 = pure CE
  SubsetMode subset_mode = SubsetMode::full;
  int subset_n = 0;   // 0 resolves to the full ranking length
  bool warm_start = false;  // rank stage starts from the CE model
  uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  double total = 0.0;
  double ce = 0.0;
  double listmle = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochStats> history;
};

// Mini-batch SGD over the hybrid objective. canon == nullptr or alpha == 0
// trains plain cross-entropy. Losses are averaged per epoch over all
// samples. Throws NumericError naming the epoch if anything goes non-finite.
TrainResult train(ModelParams model, const LogitMatrix& data,
                  const CanonicalTable* canon, const TrainConfig& config);

struct PipelineResult {
  SyntheticDataset data;
  ModelParams ce_model;
  std::vector<RankProbabilityMatrix> rpms;
  CanonicalTable canon;
  ModelParams rank_model;
  std::vector<EpochStats> ce_history;
  std::vector<EpochStats> rank_history;
};

// Stage 1 trains with cross-entropy, stage 2 extracts rank statistics and
// canonical rankings from the stage-1 model's training logits, stage 3
// trains the hybrid objective (fresh init unless config.warm_start). Classes
// without any correctly predicted training sample abort with a
// ValidationError naming them.
PipelineResult two_stage_pipeline(const SyntheticSpec& spec,
                                  const TrainConfig& config,
                                  const std::vector<int>& hidden = {32});

// arch.json plus one tensor container per layer parameter. Containers are
// float32; reloading truncates accordingly.
void save_model(const ModelParams& model, const std::filesystem::path& dir);
ModelParams load_model(const std::filesystem::path& dir);

}  // namespace rankood
