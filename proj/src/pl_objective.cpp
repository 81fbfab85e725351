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

#include "rankood/pl_objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rankood {
namespace {

// Suffix log-sum-exps: out[i] = log sum_{t >= i} exp(s_t), accumulated
// backwards with pairwise log_add_exp. Guarantees out[i] >= s_i, which keeps
// every per-position loss term non-negative, and out[m-1] == s_{m-1} exactly.
VectorD suffix_lse(const VectorD& s) {
  VectorD out(s.size());
  double acc = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = s.size() - 1; i >= 0; --i) {
    acc = log_add_exp(acc, s(i));
    out(i) = acc;
  }
  return out;
}

VectorD gather(const VectorD& logits, const RankTarget& target) {
  target.validate(static_cast<int>(logits.size()));
  VectorD sub(target.size());
  for (int i = 0; i < target.size(); ++i) {
    sub(i) = logits(target.classes[static_cast<size_t>(i)]);
  }
  return sub;
}

void check_finite(const VectorD& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) {
      throw ValidationError(std::string(what) + " has a non-finite entry");
    }
  }
}

}  // namespace

std::string to_string(SubsetMode mode) {
  switch (mode) {
    case SubsetMode::full: return "full";
    case SubsetMode::top: return "top";
    case SubsetMode::bottom: return "bottom";
    case SubsetMode::top_bottom: return "top_bottom";
  }
  throw ValidationError("unknown subset mode");
}

SubsetMode subset_mode_from_string(const std::string& name) {
  if (name == "full") return SubsetMode::full;
  if (name == "top") return SubsetMode::top;
  if (name == "bottom") return SubsetMode::bottom;
  if (name == "top_bottom") return SubsetMode::top_bottom;
  throw ValidationError("unknown subset mode: " + name);
}

void RankTarget::validate(int num_classes) const {
  if (positions.empty() || positions.size() != classes.size()) {
    throw ValidationError("rank target must pair positions with classes");
  }
  if (positions[0] != 0) {
    throw ValidationError("rank target must include position 0");
  }
  for (size_t i = 1; i < positions.size(); ++i) {
    if (positions[i] <= positions[i - 1]) {
      throw ValidationError("rank target positions must be ascending");
    }
  }
  std::vector<char> seen(static_cast<size_t>(num_classes), 0);
  for (const int cls : classes) {
    if (cls < 0 || cls >= num_classes) {
      throw ValidationError("rank target class " + std::to_string(cls) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (seen[static_cast<size_t>(cls)]) {
      throw ValidationError("rank target repeats class " + std::to_string(cls));
    }
    seen[static_cast<size_t>(cls)] = 1;
  }
}

RankTarget select_rank_subset(const CanonicalRanking& ranking, SubsetMode mode,
                              int n) {
  const int k = ranking.k();
  const int full_len = k + 1;
  if (mode != SubsetMode::full && (n < 1 || n > full_len)) {
    throw ValidationError("subset size " + std::to_string(n) +
                          " outside [1, " + std::to_string(full_len) + "]");
  }

  std::vector<int> positions;
  switch (mode) {
    case SubsetMode::full:
      positions.resize(static_cast<size_t>(full_len));
      for (int i = 0; i < full_len; ++i) positions[static_cast<size_t>(i)] = i;
      break;
    case SubsetMode::top:
      positions.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) positions[static_cast<size_t>(i)] = i;
      break;
    case SubsetMode::bottom: {
      positions.push_back(0);
      for (int i = k - (n - 1) + 1; i <= k; ++i) positions.push_back(i);
      break;
    }
    case SubsetMode::top_bottom: {
      const int head = (n - 1) / 2;        // beyond position 0
      const int tail = (n - 1) - head;     // lowest ranks
      for (int i = 0; i <= head; ++i) positions.push_back(i);
      for (int i = k - tail + 1; i <= k; ++i) positions.push_back(i);
      break;
    }
  }

  RankTarget target;
  target.mode = mode;
  target.positions = std::move(positions);
  target.classes.reserve(target.positions.size());
  for (const int pos : target.positions) {
    target.classes.push_back(ranking.permutation[static_cast<size_t>(pos)]);
  }
  return target;
}

double pl_permutation_log_prob(const VectorD& scores_in_rank_order) {
  if (scores_in_rank_order.size() < 1) {
    throw ValidationError("permutation probability needs at least one score");
  }
  check_finite(scores_in_rank_order, "scores");
  const VectorD lse = suffix_lse(scores_in_rank_order);
  double log_prob = 0.0;
  for (Eigen::Index i = 0; i < scores_in_rank_order.size(); ++i) {
    log_prob -= lse(i) - scores_in_rank_order(i);
  }
  return log_prob;
}

double pl_permutation_prob(const VectorD& scores_in_rank_order) {
  return std::exp(pl_permutation_log_prob(scores_in_rank_order));
}

double listmle_loss(const VectorD& logits, const RankTarget& target) {
  check_finite(logits, "logits");
  return -pl_permutation_log_prob(gather(logits, target));
}

VectorD listmle_grad(const VectorD& logits, const RankTarget& target) {
  check_finite(logits, "logits");
  const VectorD sub = gather(logits, target);
  const VectorD lse = suffix_lse(sub);
  const int m = static_cast<int>(sub.size());

  // d/ds_p = sum_{t <= p} softmax weight of s_p within suffix t, minus 1.
  VectorD sub_grad = VectorD::Zero(m);
  for (int p = 0; p < m; ++p) {
    double g = -1.0;
    for (int t = 0; t <= p; ++t) g += std::exp(sub(p) - lse(t));
    sub_grad(p) = g;
  }

  VectorD grad = VectorD::Zero(logits.size());
  for (int i = 0; i < target.size(); ++i) {
    grad(target.classes[static_cast<size_t>(i)]) = sub_grad(i);
  }
  return grad;
}

double cross_entropy_loss(const VectorD& logits, int label) {
  check_finite(logits, "logits");
  if (label < 0 || label >= logits.size()) {
    throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(logits.size()) + ")");
  }
  return log_sum_exp(logits) - logits(label);
}

VectorD cross_entropy_grad(const VectorD& logits, int label) {
  check_finite(logits, "logits");
  if (label < 0 || label >= logits.size()) {
    throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(logits.size()) + ")");
  }
  VectorD grad = softmax(logits);
  grad(label) -= 1.0;
  return grad;
}

LossValue hybrid_loss(const VectorD& logits, int label, const RankTarget& target,
                      double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("alpha must be finite and non-negative");
  }
  if (target.classes.empty() || target.classes[0] != label) {
    throw ValidationError("rank target position 0 must carry the sample label");
  }
  LossValue loss;
  loss.alpha = alpha;
  loss.ce_part = cross_entropy_loss(logits, label);
  if (alpha != 0.0) {
    loss.listmle_part = listmle_loss(logits, target);
    loss.total = loss.ce_part + alpha * loss.listmle_part;
  } else {
    loss.total = loss.ce_part;
  }
  return loss;
}

VectorD hybrid_grad(const VectorD& logits, int label, const RankTarget& target,
                    double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("alpha must be finite and non-negative");
  }
  if (target.classes.empty() || target.classes[0] != label) {
    throw ValidationError("rank target position 0 must carry the sample label");
  }
  VectorD grad = cross_entropy_grad(logits, label);
  if (alpha != 0.0) grad += alpha * listmle_grad(logits, target);
  return grad;
}

}  // namespace rankood
