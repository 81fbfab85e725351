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

#include <string>
#include <vector>

#include "rankood/canonical_ranks.hpp"
#include "rankood/numeric.hpp"
#include "rankood/types.hpp"

namespace rankood {

enum class SubsetMode { full, top, bottom, top_bottom };

std::string to_string(SubsetMode mode);
SubsetMode subset_mode_from_string(const std::string& name);

// Rank positions a sample's listwise loss is evaluated on, together with the
// canonical class occupying each position. Positions are ascending and
// always include 0 (the predicted class itself).
struct RankTarget {
  std::vector<int> positions;
  std::vector<int> classes;
  SubsetMode mode = SubsetMode::full;

  int size() const { return static_cast<int>(positions.size()); }
  void validate(int num_classes) const;
};

// Positions kept per mode for a ranking over K + 1 entries, n of them kept:
//   full:       all positions (n ignored)
//   top:        0 .. n-1
//   bottom:     {0} plus the lowest n-1 positions
//   top_bottom: {0}, the next floor((n-1)/2) top positions, and the lowest
//               ceil((n-1)/2) positions
// Requires 1 <= n <= K + 1.
RankTarget select_rank_subset(const CanonicalRanking& ranking, SubsetMode mode,
                              int n);

// Plackett-Luce probability of observing `scores` in its given order:
//   prod_i exp(s_i) / sum_{t >= i} exp(s_t).
// Computed via suffix log-sum-exp, so the log form is exact for one entry
// and never positive.
double pl_permutation_log_prob(const VectorD& scores_in_rank_order);
double pl_permutation_prob(const VectorD& scores_in_rank_order);

// Listwise loss: negative PL log-likelihood of the sub-list of `logits`
// picked out by the target's classes. Non-negative; zero only for a
// single-entry target. Gradient is dense over all C logits but zero outside
// the target classes.
double listmle_loss(const VectorD& logits, const RankTarget& target);
VectorD listmle_grad(const VectorD& logits, const RankTarget& target);

struct LossValue {
  double total = 0.0;
  double ce_part = 0.0;
  double listmle_part = 0.0;
  double alpha = 0.0;
};

// total = ce + alpha * listmle. The target's position-0 class must equal the
// label. alpha = 0 skips the listwise term entirely, so training with it is
// bitwise identical to plain cross-entropy.
LossValue hybrid_loss(const VectorD& logits, int label, const RankTarget& target,
                      double alpha);
VectorD hybrid_grad(const VectorD& logits, int label, const RankTarget& target,
                    double alpha);

double cross_entropy_loss(const VectorD& logits, int label);
VectorD cross_entropy_grad(const VectorD& logits, int label);

}  // namespace rankood
