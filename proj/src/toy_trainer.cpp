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

#include "rankood/toy_trainer.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>

#include "rankood/numeric.hpp"
#include "rankood/tensor_io.hpp"

namespace rankood {
namespace {

constexpr double kMeanScale = 6.0;  // cluster mean magnitude, in noise sigmas
constexpr double kLineSpan = 1.5;   // half-extent of the shared line, x mean scale

}  // namespace

std::string to_string(OodMode mode) {
  switch (mode) {
    case OodMode::near: return "near";
    case OodMode::far: return "far";
  }
  throw ValidationError("unknown OOD mode");
}

OodMode ood_mode_from_string(const std::string& name) {
  if (name == "near") return OodMode::near;
  if (name == "far") return OodMode::far;
  throw ValidationError("unknown OOD mode: " + name);
}

void SyntheticSpec::validate() const {
  if (n_classes < 3) throw ValidationError("need at least three classes");
  if (feature_dim < n_classes) {
    throw ValidationError("feature_dim must be >= n_classes so every class "
                          "gets its own axis");
  }
  if (samples_per_class < 4) {
    throw ValidationError("need at least four samples per class");
  }
  if (!(class_similarity >= 0.0 && class_similarity <= 1.0)) {
    throw ValidationError("class_similarity must lie in [0, 1]");
  }
  if (!(ood_shift >= 0.0) || !std::isfinite(ood_shift)) {
    throw ValidationError("ood_shift must be finite and non-negative");
  }
  if (ood_shift > 0.0 && feature_dim < n_classes + 2) {
    throw ValidationError("ood_shift > 0 needs feature_dim >= n_classes + 2 "
                          "for the displacement axes");
  }
  if (ood_mode == OodMode::far && ood_shift == 0.0) {
    throw ValidationError("far OOD mode needs ood_shift > 0");
  }
}

MatrixD synthetic_class_means(const SyntheticSpec& spec) {
  spec.validate();
  const int c = spec.n_classes;
  const int d = spec.feature_dim;
  const double s = spec.class_similarity;

  // Shared line direction: its own axis when one is free, else the diagonal.
  VectorD line = VectorD::Zero(d);
  if (d >= c + 1) {
    line(c) = 1.0;
  } else {
    line.setConstant(1.0 / std::sqrt(static_cast<double>(d)));
  }

  MatrixD means = MatrixD::Zero(c, d);
  for (int i = 0; i < c; ++i) {
    const double t = c == 1 ? 0.0
                            : (2.0 * i - (c - 1)) / static_cast<double>(c - 1);
    means(i, i) = kMeanScale * (1.0 - s);
    means.row(i) += kMeanScale * s * kLineSpan * t * line.transpose();
  }
  return means;
}

MatrixD synthetic_ood_means(const SyntheticSpec& spec) {
  const MatrixD id_means = synthetic_class_means(spec);
  const int c = spec.n_classes;
  const int d = spec.feature_dim;
  const int n_clusters = c - 1;
  const int n_axes = d - c - 1;  // axes beyond the class axes and the line

  MatrixD means(n_clusters, d);
  for (int k = 0; k < n_clusters; ++k) {
    if (spec.ood_mode == OodMode::near) {
      means.row(k) = 0.5 * (id_means.row(k) + id_means.row(k + 1));
    } else {
      means.row(k) = id_means.colwise().mean();
    }
    if (spec.ood_shift > 0.0) {
      means(k, c + 1 + (k % n_axes)) += spec.ood_shift;
    }
  }
  return means;
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int c = spec.n_classes;
  const int d = spec.feature_dim;
  const MatrixD id_means = synthetic_class_means(spec);
  const MatrixD ood_means = synthetic_ood_means(spec);
  const int n_clusters = static_cast<int>(ood_means.rows());

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto draw_id = [&](int per_class, SplitTag split) {
    LogitMatrix m;
    m.split = split;
    m.data.resize(static_cast<Eigen::Index>(c) * per_class, d);
    VectorI labels(static_cast<Eigen::Index>(c) * per_class);
    Eigen::Index row = 0;
    for (int cls = 0; cls < c; ++cls) {
      for (int i = 0; i < per_class; ++i, ++row) {
        for (int j = 0; j < d; ++j) {
          m.data(row, j) = static_cast<float>(id_means(cls, j) + noise(rng));
        }
        labels(row) = cls;
      }
    }
    m.labels = std::move(labels);
    return m;
  };
  const auto draw_ood = [&](Eigen::Index count, SplitTag split) {
    LogitMatrix m;
    m.split = split;
    m.data.resize(count, d);
    for (Eigen::Index i = 0; i < count; ++i) {
      const int cluster = static_cast<int>(i % n_clusters);
      for (int j = 0; j < d; ++j) {
        m.data(i, j) = static_cast<float>(ood_means(cluster, j) + noise(rng));
      }
    }
    return m;
  };

  const int eval_per_class = (spec.samples_per_class + 3) / 4;
  SyntheticDataset data;
  data.train = draw_id(spec.samples_per_class, SplitTag::train);
  data.val_id = draw_id(eval_per_class, SplitTag::val_id);
  data.val_ood = draw_ood(data.val_id.rows(), SplitTag::val_ood);
  data.test_id = draw_id(eval_per_class, SplitTag::test_id);
  data.test_ood = draw_ood(data.test_id.rows(), SplitTag::test_ood);
  return data;
}

void MlpArchitecture::validate() const {
  if (input_dim < 2) throw ValidationError("model input_dim must be >= 2");
  if (output_dim < 2) throw ValidationError("model output_dim must be >= 2");
  for (const int h : hidden) {
    if (h < 2) throw ValidationError("hidden width must be >= 2");
  }
}

bool ModelParams::finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

ModelParams init_model(const MlpArchitecture& arch, uint64_t seed) {
  arch.validate();
  ModelParams model;
  model.arch = arch;
  std::mt19937_64 rng(seed);
  std::vector<int> dims;
  dims.push_back(arch.input_dim);
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(arch.output_dim);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    MatrixD w(out, in);
    for (int r = 0; r < out; ++r) {
      for (int q = 0; q < in; ++q) w(r, q) = uniform(rng);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(VectorD::Zero(out));
  }
  return model;
}

namespace {

struct ForwardCache {
  std::vector<MatrixD> activations;  // activations[0] = input
  std::vector<MatrixD> pre;          // pre-activation per layer
};

MatrixD forward_cached(const ModelParams& model, const MatrixD& x,
                       ForwardCache* cache) {
  MatrixD a = x;
  if (cache) {
    cache->activations.clear();
    cache->pre.clear();
    cache->activations.push_back(a);
  }
  const size_t layers = model.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    MatrixD z = a * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    if (cache) cache->pre.push_back(z);
    if (l + 1 < layers) {
      a = z.cwiseMax(0.0);
      if (cache) cache->activations.push_back(a);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

struct Grads {
  std::vector<MatrixD> w;
  std::vector<VectorD> b;
};

// d_logits is dLoss/dlogits for the batch (already averaged).
Grads backward(const ModelParams& model, const ForwardCache& cache,
               MatrixD d_logits) {
  const size_t layers = model.weights.size();
  Grads g;
  g.w.resize(layers);
  g.b.resize(layers);
  MatrixD dz = std::move(d_logits);
  for (size_t l = layers; l-- > 0;) {
    g.w[l] = dz.transpose() * cache.activations[l];
    g.b[l] = dz.colwise().sum().transpose();
    if (l > 0) {
      MatrixD da = dz * model.weights[l];
      dz = da.cwiseProduct(
          (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

}  // namespace

MatrixD forward_logits(const ModelParams& model, const MatrixD& inputs) {
  model.arch.validate();
  if (inputs.cols() != model.arch.input_dim) {
    throw ValidationError("input width " + std::to_string(inputs.cols()) +
                          " does not match model input_dim " +
                          std::to_string(model.arch.input_dim));
  }
  return forward_cached(model, inputs, nullptr);
}

LogitMatrix model_logits(const ModelParams& model, const LogitMatrix& features) {
  features.validate();
  LogitMatrix out;
  out.split = features.split;
  out.labels = features.labels;
  out.data = forward_logits(model, features.data.cast<double>()).cast<float>();
  // A blown-up model produces logits outside the float32 range; that is a
  // numeric failure of the model, not bad input.
  if (!out.data.allFinite()) {
    throw NumericError("model logits overflow the float32 range");
  }
  out.validate();
  return out;
}

double accuracy(const ModelParams& model, const LogitMatrix& features) {
  features.validate();
  if (!features.labels) throw ValidationError("accuracy requires labels");
  const MatrixD logits = forward_logits(model, features.data.cast<double>());
  int64_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (argmax_lowest(logits.row(i).transpose()) == (*features.labels)(i)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

SgdMomentum::SgdMomentum(const ModelParams& model, double momentum)
    : mu(momentum) {
  for (const auto& w : model.weights) {
    vel_w.push_back(MatrixD::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : model.biases) {
    vel_b.push_back(VectorD::Zero(b.size()));
  }
}

void SgdMomentum::step(ModelParams& model, const std::vector<MatrixD>& grad_w,
                       const std::vector<VectorD>& grad_b, double lr) {
  for (size_t l = 0; l < model.weights.size(); ++l) {
    vel_w[l] = mu * vel_w[l] + grad_w[l];
    model.weights[l] -= lr * vel_w[l];
    vel_b[l] = mu * vel_b[l] + grad_b[l];
    model.biases[l] -= lr * vel_b[l];
  }
}

double cosine_lr(double eta0, int epoch, int total_epochs) {
  if (total_epochs < 1) throw ValidationError("total_epochs must be >= 1");
  if (epoch < 0 || epoch >= total_epochs) {
    throw ValidationError("epoch outside [0, total_epochs)");
  }
  return eta0 * 0.5 *
         (1.0 + std::cos(std::numbers::pi * epoch / total_epochs));
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive and finite");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ValidationError("momentum must lie in [0, 1)");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("alpha must be finite and non-negative");
  }
  if (subset_n < 0) throw ValidationError("subset_n must be >= 0");
}

TrainResult train(ModelParams model, const LogitMatrix& data,
                  const CanonicalTable* canon, const TrainConfig& config) {
  config.validate();
  data.validate();
  if (!data.labels) throw ValidationError("training data requires labels");
  model.arch.validate();
  if (model.arch.input_dim != static_cast<int>(data.cols())) {
    throw ValidationError("model input_dim does not match data width");
  }

  const bool use_rank_term = canon != nullptr && config.alpha != 0.0;
  std::map<int, RankTarget> targets;
  if (use_rank_term) {
    validate_table(*canon, model.arch.output_dim);
    for (const auto& [cls, ranking] : *canon) {
      const int n = config.subset_n == 0 ? ranking.k() + 1 : config.subset_n;
      targets[cls] = select_rank_subset(ranking, config.subset_mode, n);
    }
  }

  const MatrixD x = data.data.cast<double>();
  const Eigen::Index n_samples = x.rows();
  std::vector<int> order(static_cast<size_t>(n_samples));
  for (Eigen::Index i = 0; i < n_samples; ++i) order[static_cast<size_t>(i)] = static_cast<int>(i);

  std::mt19937_64 rng(config.seed);
  SgdMomentum sgd(model, config.momentum);
  TrainResult result;
  ForwardCache cache;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.schedule == LrSchedule::cosine
                          ? cosine_lr(config.learning_rate, epoch, config.epochs)
                          : config.learning_rate;
    deterministic_shuffle(order, rng);

    EpochStats stats;
    stats.learning_rate = lr;
    for (Eigen::Index start = 0; start < n_samples; start += config.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(config.batch_size,
                                                    n_samples - start);
      MatrixD xb(b, x.cols());
      std::vector<int> yb(static_cast<size_t>(b));
      for (Eigen::Index i = 0; i < b; ++i) {
        const int src = order[static_cast<size_t>(start + i)];
        xb.row(i) = x.row(src);
        yb[static_cast<size_t>(i)] = (*data.labels)(src);
      }

      const MatrixD logits = forward_cached(model, xb, &cache);
      if (!logits.allFinite()) {
        throw NumericError("training diverged at epoch " +
                           std::to_string(epoch));
      }
      MatrixD d_logits(b, logits.cols());
      for (Eigen::Index i = 0; i < b; ++i) {
        const VectorD row = logits.row(i).transpose();
        const int label = yb[static_cast<size_t>(i)];
        if (use_rank_term) {
          const auto it = targets.find(label);
          if (it == targets.end()) {
            throw ValidationError("no canonical ranking for label " +
                                  std::to_string(label));
          }
          const LossValue loss = hybrid_loss(row, label, it->second, config.alpha);
          stats.total += loss.total;
          stats.ce += loss.ce_part;
          stats.listmle += loss.listmle_part;
          d_logits.row(i) =
              hybrid_grad(row, label, it->second, config.alpha).transpose();
        } else {
          const double ce = cross_entropy_loss(row, label);
          stats.total += ce;
          stats.ce += ce;
          d_logits.row(i) = cross_entropy_grad(row, label).transpose();
        }
      }
      d_logits /= static_cast<double>(b);
      const Grads g = backward(model, cache, std::move(d_logits));
      sgd.step(model, g.w, g.b, lr);
    }

    stats.total /= static_cast<double>(n_samples);
    stats.ce /= static_cast<double>(n_samples);
    stats.listmle /= static_cast<double>(n_samples);
    if (!std::isfinite(stats.total) || !model.finite()) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back(stats);
  }
  result.model = std::move(model);
  return result;
}

PipelineResult two_stage_pipeline(const SyntheticSpec& spec,
                                  const TrainConfig& config,
                                  const std::vector<int>& hidden) {
  spec.validate();
  config.validate();

  PipelineResult out;
  out.data = generate_synthetic(spec);

  MlpArchitecture arch;
  arch.input_dim = spec.feature_dim;
  arch.hidden = hidden;
  arch.output_dim = spec.n_classes;

  TrainConfig ce_config = config;
  ce_config.alpha = 0.0;
  ce_config.seed = derive_seed(config.seed, 2);
  TrainResult ce = train(init_model(arch, derive_seed(config.seed, 1)),
                         out.data.train, nullptr, ce_config);
  out.ce_model = std::move(ce.model);
  out.ce_history = std::move(ce.history);

  const LogitMatrix train_logits = model_logits(out.ce_model, out.data.train);
  out.rpms = compute_all_rpms(train_logits, spec.n_classes - 1);
  std::string missing;
  for (const auto& rpm : out.rpms) {
    if (rpm.empty_support()) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(rpm.predicted_class);
    }
  }
  if (!missing.empty()) {
    throw ValidationError("no correctly predicted training samples for "
                          "classes: " + missing);
  }
  out.canon = solve_all(out.rpms);

  TrainConfig rank_config = config;
  rank_config.seed = derive_seed(config.seed, 4);
  ModelParams rank_init = config.warm_start
                              ? out.ce_model
                              : init_model(arch, derive_seed(config.seed, 3));
  TrainResult rank = train(std::move(rank_init), out.data.train, &out.canon,
                           rank_config);
  out.rank_model = std::move(rank.model);
  out.rank_history = std::move(rank.history);
  return out;
}

void save_model(const ModelParams& model, const std::filesystem::path& dir) {
  model.arch.validate();
  // Parameters outside the float32 container range mean the model blew up.
  for (size_t l = 0; l < model.weights.size(); ++l) {
    if (!model.weights[l].cast<float>().allFinite() ||
        !model.biases[l].cast<float>().allFinite()) {
      throw NumericError("model parameters overflow the float32 range");
    }
  }
  std::filesystem::create_directories(dir);
  nlohmann::json doc;
  doc["input_dim"] = model.arch.input_dim;
  doc["hidden"] = model.arch.hidden;
  doc["output_dim"] = model.arch.output_dim;
  doc["activation"] = "relu";
  doc["n_layers"] = model.weights.size();
  {
    std::ofstream f(dir / "arch.json", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + (dir / "arch.json").string());
    f << doc.dump(2) << '\n';
    if (!f.flush()) throw IoError("write failed for " + (dir / "arch.json").string());
  }
  for (size_t l = 0; l < model.weights.size(); ++l) {
    LogitMatrix w;
    w.data = model.weights[l].cast<float>();
    write_logits(w, dir / ("w" + std::to_string(l) + ".rkod"),
                 TensorFormat::binary);
    LogitMatrix b;
    b.data = model.biases[l].transpose().cast<float>();
    write_logits(b, dir / ("b" + std::to_string(l) + ".rkod"),
                 TensorFormat::binary);
  }
}

ModelParams load_model(const std::filesystem::path& dir) {
  std::ifstream f(dir / "arch.json", std::ios::binary);
  if (!f) throw IoError("cannot open " + (dir / "arch.json").string());
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad model architecture file: " + std::string(e.what()));
  }
  ModelParams model;
  try {
    model.arch.input_dim = doc.at("input_dim").get<int>();
    model.arch.hidden = doc.at("hidden").get<std::vector<int>>();
    model.arch.output_dim = doc.at("output_dim").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad model architecture file: " + std::string(e.what()));
  }
  model.arch.validate();
  const size_t layers = model.arch.hidden.size() + 1;
  for (size_t l = 0; l < layers; ++l) {
    const LogitMatrix w = read_logits(dir / ("w" + std::to_string(l) + ".rkod"),
                                      TensorFormat::binary);
    const LogitMatrix b = read_logits(dir / ("b" + std::to_string(l) + ".rkod"),
                                      TensorFormat::binary);
    model.weights.push_back(w.data.cast<double>());
    if (b.rows() != 1) throw FormatError("bias tensor must have one row");
    model.biases.push_back(b.data.row(0).transpose().cast<double>());
  }
  // Shape check against the declared architecture.
  std::vector<int> dims;
  dims.push_back(model.arch.input_dim);
  dims.insert(dims.end(), model.arch.hidden.begin(), model.arch.hidden.end());
  dims.push_back(model.arch.output_dim);
  for (size_t l = 0; l < layers; ++l) {
    if (model.weights[l].rows() != dims[l + 1] ||
        model.weights[l].cols() != dims[l] ||
        model.biases[l].size() != dims[l + 1]) {
      throw FormatError("model tensor shapes do not match arch.json");
    }
  }
  return model;
}

}  // namespace rankood
