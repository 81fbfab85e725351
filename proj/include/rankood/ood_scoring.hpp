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

#include <filesystem>
#include <map>

#include "rankood/canonical_ranks.hpp"
#include "rankood/types.hpp"

namespace rankood {

// Per-class reference logits: entry i of per_class[c] is the chosen
// percentile (nearest-rank) of the rank-i logit over the correctly
// predicted training samples of class c whose predicted ranking matches the
// canonical one on at least `min_matching` of the K+1 positions.
// min_matching is the largest threshold every class can satisfy.
struct ThresholdProfile {
  double percentile = 0.95;
  int k = 0;
  int min_matching = 0;
  std::map<int, VectorD> per_class;  // class -> K+1 reference logits

  void validate(int num_classes) const;
};

// Requires labeled logits and a canonical table covering every class that
// appears in the labels; classes with no retained sample abort with a
// ValidationError listing them.
ThresholdProfile build_profile(const LogitMatrix& train_logits,
                               const CanonicalTable& canon, double percentile);

void save_profile(const ThresholdProfile& profile,
                  const std::filesystem::path& path);
ThresholdProfile load_profile(const std::filesystem::path& path);

// Cumulative margin penalties: delta_i = gamma ^ r_i where r_i counts the
// positions j >= i at which the two rankings disagree. Both rankings run
// over positions 0..K; gamma >= 1. All ones when the rankings agree or
// gamma == 1.
VectorD penalty_vector(const std::vector<int>& predicted_ranking,
                       const CanonicalRanking& canonical, double gamma);

// Per-rank detection features of one sample: log softmax over
// u_i = x_i / delta_i - Ref_i, where x_i is the sample's rank-i logit and
// Ref the profile row of its predicted class.
VectorD score_features(const VectorD& sample_logits, const CanonicalTable& canon,
                       const ThresholdProfile& profile, double gamma);

struct FitReport {
  double r_squared = 0.0;
  bool ridge_fallback = false;
};

struct RankWeights {
  VectorD w;  // one weight per rank position, intercept already dropped
  FitReport fit;
};

// Ordinary least squares of binary membership (ID = 1, OOD = 0) on the
// score features, with an intercept column that is discarded afterwards.
// Rank-deficient designs fall back to ridge (lambda = 1e-6) and set the
// flag. Requires at least K + 2 total rows.
RankWeights fit_weights(const MatrixD& id_features, const MatrixD& ood_features);

void save_weights(const RankWeights& weights, const std::filesystem::path& path);
RankWeights load_weights(const std::filesystem::path& path);

// Higher = more in-distribution.
double rankood_score(const VectorD& sample_logits, const CanonicalTable& canon,
                     const ThresholdProfile& profile, const RankWeights& weights,
                     double gamma);

// Maximum softmax probability baseline, shift invariant, in (0, 1].
double msp_score(const VectorD& sample_logits);

}  // namespace rankood
