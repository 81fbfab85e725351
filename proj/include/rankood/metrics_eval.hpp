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

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rankood/canonical_ranks.hpp"
#include "rankood/types.hpp"

namespace rankood {

// Scores are oriented higher = more in-distribution for both inputs.
// Mann-Whitney form: ties count half. Exact, since contributions are
// integer halves.
double auroc(const VectorD& id_scores, const VectorD& ood_scores);

struct FprResult {
  double fpr = 0.0;
  double threshold = 0.0;
};

// False-positive rate (OOD scored as ID) at the score threshold that keeps
// `tpr` of the ID samples, threshold chosen by the nearest-rank rule.
FprResult fpr_at_tpr(const VectorD& id_scores, const VectorD& ood_scores,
                     double tpr = 0.95);

struct ScoreReport {
  std::string detector;
  int64_t n_id = 0;
  int64_t n_ood = 0;
  double auroc = 0.0;
  double fpr95 = 0.0;
  double threshold = 0.0;
};

ScoreReport make_score_report(const std::string& detector,
                              const VectorD& id_scores,
                              const VectorD& ood_scores);

// Conditional-probability matrix: per predicted class, entry i is
// P(rank i matches canon | ranks 1..i-1 match), as a ratio of stored counts.
// Entries with an empty condition set are NaN with denominator 0, never 0.
struct CpMatrix {
  int num_classes = 0;
  int k = 0;
  std::map<int, VectorD> entries;       // class -> K conditional probabilities
  std::map<int, Vector<int64_t>> numer; // class -> matching-prefix counts
  std::map<int, Vector<int64_t>> denom; // class -> condition-set sizes

  // Mean over all defined entries of all classes; NaN when none are defined.
  double mean_defined() const;
  void validate() const;
};

// Groups unlabeled logits by their predicted class; canon must cover every
// class that occurs as a prediction.
CpMatrix cp_matrix(const LogitMatrix& logits, const CanonicalTable& canon);

struct RankLogitRow {
  int position = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population form
  double hist_lo = 0.0;
  double hist_hi = 0.0;
  std::vector<int64_t> hist_counts;
};

// Distribution of the logit value observed at each requested rank position,
// over all samples. Positions must lie in [0, C-1].
std::vector<RankLogitRow> rank_logit_summary(const LogitMatrix& logits,
                                             const std::vector<int>& positions,
                                             int hist_bins = 16);

void write_cp_csv(const CpMatrix& cp, std::ostream& out);
void write_summary_csv(const std::vector<RankLogitRow>& rows, std::ostream& out);
void write_reports_csv(const std::vector<ScoreReport>& reports, std::ostream& out);

}  // namespace rankood
