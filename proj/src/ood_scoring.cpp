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

#include "rankood/ood_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "rankood/numeric.hpp"

namespace rankood {

void ThresholdProfile::validate(int num_classes) const {
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw ValidationError("profile percentile must lie in (0, 1)");
  }
  if (k < 1 || k > num_classes - 1) {
    throw ValidationError("profile rank count out of range");
  }
  if (min_matching < 0 || min_matching > k + 1) {
    throw ValidationError("profile min_matching out of range");
  }
  if (per_class.empty()) throw ValidationError("profile covers no classes");
  for (const auto& [cls, ref] : per_class) {
    if (cls < 0 || cls >= num_classes) {
      throw ValidationError("profile names class " + std::to_string(cls) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (ref.size() != k + 1) {
      throw ValidationError("profile row for class " + std::to_string(cls) +
                            " has length " + std::to_string(ref.size()) +
                            ", expected " + std::to_string(k + 1));
    }
    if (!ref.allFinite()) {
      throw ValidationError("profile row for class " + std::to_string(cls) +
                            " has a non-finite entry");
    }
  }
}

ThresholdProfile build_profile(const LogitMatrix& train_logits,
                               const CanonicalTable& canon, double percentile) {
  train_logits.validate();
  if (!train_logits.labels) {
    throw ValidationError("threshold profile requires labeled logits");
  }
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw ValidationError("percentile must lie in (0, 1)");
  }
  const int c = static_cast<int>(train_logits.cols());
  validate_table(canon, c);
  const int k = canon.begin()->second.k();

  // Rank logits and canonical match counts of every correctly predicted
  // sample, grouped by class.
  struct Sample {
    VectorD rank_logits;  // K+1 values, rank order
    int matching = 0;     // positions agreeing with the canonical ranking
  };
  std::map<int, std::vector<Sample>> by_class;
  for (Eigen::Index n = 0; n < train_logits.rows(); ++n) {
    const int label = (*train_logits.labels)(n);
    const auto order = descending_order(train_logits.data.row(n).transpose());
    if (order[0] != label) continue;
    const auto canon_it = canon.find(label);
    if (canon_it == canon.end()) {
      throw ValidationError("no canonical ranking for class " +
                            std::to_string(label));
    }
    Sample s;
    s.rank_logits.resize(k + 1);
    for (int i = 0; i <= k; ++i) {
      s.rank_logits(i) = train_logits.data(n, order[static_cast<size_t>(i)]);
      if (order[static_cast<size_t>(i)] ==
          canon_it->second.permutation[static_cast<size_t>(i)]) {
        ++s.matching;
      }
    }
    by_class[label].push_back(std::move(s));
  }

  std::string missing;
  for (const auto& [cls, ranking] : canon) {
    (void)ranking;
    if (by_class.find(cls) == by_class.end()) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(cls);
    }
  }
  if (!missing.empty()) {
    throw ValidationError("no correctly predicted samples to profile for "
                          "classes: " + missing);
  }

  // Highest match threshold every class can satisfy with at least one sample.
  int min_matching = k + 1;
  for (const auto& [cls, samples] : by_class) {
    int best = 0;
    for (const auto& s : samples) best = std::max(best, s.matching);
    min_matching = std::min(min_matching, best);
  }

  ThresholdProfile profile;
  profile.percentile = percentile;
  profile.k = k;
  profile.min_matching = min_matching;
  for (const auto& [cls, samples] : by_class) {
    std::vector<double> column;
    column.reserve(samples.size());
    VectorD ref(k + 1);
    for (int i = 0; i <= k; ++i) {
      column.clear();
      for (const auto& s : samples) {
        if (s.matching >= min_matching) column.push_back(s.rank_logits(i));
      }
      std::sort(column.begin(), column.end());
      const int idx = nearest_rank_index(percentile,
                                         static_cast<int>(column.size()));
      ref(i) = column[static_cast<size_t>(idx - 1)];
    }
    profile.per_class[cls] = std::move(ref);
  }
  profile.validate(c);
  return profile;
}

void save_profile(const ThresholdProfile& profile,
                  const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["percentile"] = profile.percentile;
  doc["k"] = profile.k;
  doc["min_matching"] = profile.min_matching;
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, ref] : profile.per_class) {
    classes[std::to_string(cls)] =
        std::vector<double>(ref.data(), ref.data() + ref.size());
  }
  doc["classes"] = std::move(classes);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << doc.dump(2) << '\n';
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

ThresholdProfile load_profile(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for reading");
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad profile " + path.string() + ": " + e.what());
  }
  ThresholdProfile profile;
  try {
    profile.percentile = doc.at("percentile").get<double>();
    profile.k = doc.at("k").get<int>();
    profile.min_matching = doc.at("min_matching").get<int>();
    for (const auto& [key, value] : doc.at("classes").items()) {
      const auto values = value.get<std::vector<double>>();
      VectorD ref(static_cast<Eigen::Index>(values.size()));
      for (size_t i = 0; i < values.size(); ++i) {
        ref(static_cast<Eigen::Index>(i)) = values[i];
      }
      profile.per_class[std::stoi(key)] = std::move(ref);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad profile " + path.string() + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError("bad profile " + path.string() + ": " + e.what());
  }
  return profile;
}

VectorD penalty_vector(const std::vector<int>& predicted_ranking,
                       const CanonicalRanking& canonical, double gamma) {
  const size_t len = canonical.permutation.size();
  if (predicted_ranking.size() != len) {
    throw ValidationError("predicted ranking length " +
                          std::to_string(predicted_ranking.size()) +
                          " does not match canonical length " +
                          std::to_string(len));
  }
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
    throw ValidationError("gamma must be finite and >= 1");
  }
  VectorD delta(static_cast<Eigen::Index>(len));
  int mismatches = 0;  // among positions i..K, accumulated from the tail
  for (size_t i = len; i-- > 0;) {
    if (predicted_ranking[i] != canonical.permutation[i]) ++mismatches;
    delta(static_cast<Eigen::Index>(i)) = std::pow(gamma, mismatches);
  }
  return delta;
}

VectorD score_features(const VectorD& sample_logits, const CanonicalTable& canon,
                       const ThresholdProfile& profile, double gamma) {
  const int c = static_cast<int>(sample_logits.size());
  if (!sample_logits.allFinite()) {
    throw ValidationError("sample logits have a non-finite entry");
  }
  validate_table(canon, c);
  profile.validate(c);
  const int k = profile.k;
  if (canon.begin()->second.k() != k) {
    throw ValidationError("profile and canonical table disagree on K");
  }

  const int predicted = argmax_lowest(sample_logits);
  const auto canon_it = canon.find(predicted);
  const auto ref_it = profile.per_class.find(predicted);
  if (canon_it == canon.end() || ref_it == profile.per_class.end()) {
    throw ValidationError("predicted class " + std::to_string(predicted) +
                          " has no canonical ranking or profile row");
  }

  const auto order = descending_order(sample_logits);
  std::vector<int> predicted_ranking(order.begin(),
                                     order.begin() + (k + 1));
  const VectorD delta = penalty_vector(predicted_ranking, canon_it->second, gamma);

  VectorD u(k + 1);
  for (int i = 0; i <= k; ++i) {
    u(i) = sample_logits(order[static_cast<size_t>(i)]) / delta(i) -
           (ref_it->second)(i);
  }
  return log_softmax(u);
}

RankWeights fit_weights(const MatrixD& id_features, const MatrixD& ood_features) {
  if (id_features.rows() < 1 || ood_features.rows() < 1) {
    throw ValidationError("weight fitting needs both ID and OOD rows");
  }
  if (id_features.cols() != ood_features.cols()) {
    throw ValidationError("ID and OOD feature widths differ");
  }
  const Eigen::Index m = id_features.cols();
  const Eigen::Index n = id_features.rows() + ood_features.rows();
  if (n < m + 2) {
    throw ValidationError("weight fitting needs at least " +
                          std::to_string(m + 2) + " rows, got " +
                          std::to_string(n));
  }

  MatrixD x(n, m + 1);
  x.col(0).setOnes();
  x.block(0, 1, id_features.rows(), m) = id_features;
  x.block(id_features.rows(), 1, ood_features.rows(), m) = ood_features;
  if (!x.allFinite()) {
    throw ValidationError("feature matrix has a non-finite entry");
  }
  VectorD y = VectorD::Zero(n);
  y.head(id_features.rows()).setOnes();

  RankWeights result;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  VectorD beta;
  if (qr.rank() < x.cols()) {
    // Rank-deficient design (duplicated or constant feature columns):
    // ridge with a tiny lambda keeps the solution defined.
    result.fit.ridge_fallback = true;
    const double lambda = 1e-6;
    MatrixD gram = x.transpose() * x;
    gram.diagonal().array() += lambda;
    beta = Eigen::MatrixXd(gram).ldlt().solve(x.transpose() * y);
  } else {
    beta = qr.solve(y);
  }

  const VectorD residual = y - x * beta;
  const double mean_y = y.mean();
  const double sst = (y.array() - mean_y).square().sum();
  result.fit.r_squared =
      sst > 0.0 ? 1.0 - residual.squaredNorm() / sst : 0.0;
  result.w = beta.tail(m);
  return result;
}

void save_weights(const RankWeights& weights, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["w"] = std::vector<double>(weights.w.data(),
                                 weights.w.data() + weights.w.size());
  doc["r_squared"] = weights.fit.r_squared;
  doc["ridge_fallback"] = weights.fit.ridge_fallback;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << doc.dump(2) << '\n';
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

RankWeights load_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for reading");
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad weights file " + path.string() + ": " + e.what());
  }
  RankWeights weights;
  try {
    const auto values = doc.at("w").get<std::vector<double>>();
    weights.w.resize(static_cast<Eigen::Index>(values.size()));
    for (size_t i = 0; i < values.size(); ++i) {
      weights.w(static_cast<Eigen::Index>(i)) = values[i];
    }
    weights.fit.r_squared = doc.at("r_squared").get<double>();
    weights.fit.ridge_fallback = doc.at("ridge_fallback").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad weights file " + path.string() + ": " + e.what());
  }
  return weights;
}

double rankood_score(const VectorD& sample_logits, const CanonicalTable& canon,
                     const ThresholdProfile& profile, const RankWeights& weights,
                     double gamma) {
  const VectorD features = score_features(sample_logits, canon, profile, gamma);
  if (weights.w.size() != features.size()) {
    throw ValidationError("weight vector length " +
                          std::to_string(weights.w.size()) +
                          " does not match feature length " +
                          std::to_string(features.size()));
  }
  return weights.w.dot(features);
}

double msp_score(const VectorD& sample_logits) {
  if (sample_logits.size() < 2) {
    throw ValidationError("MSP needs at least two logits");
  }
  if (!sample_logits.allFinite()) {
    throw ValidationError("sample logits have a non-finite entry");
  }
  const double lse = log_sum_exp(sample_logits);
  return std::exp(sample_logits.maxCoeff() - lse);
}

}  // namespace rankood
