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
#include <vector>

#include "rankood/types.hpp"

namespace rankood {

// Empirical distribution of which classes occupy ranks 1..k among samples
// the model predicts correctly as `predicted_class`. Rank 0 is the predicted
// class itself, so it appears in neither the rows nor the columns.
struct RankProbabilityMatrix {
  int predicted_class = -1;
  int num_classes = 0;        // C of the source logits
  int64_t support_count = 0;  // samples with argmax == label == predicted
  // (C - 1) x k; row r is candidate_class(r), column j - 1 is rank j.
  MatrixD probs;

  int k() const { return static_cast<int>(probs.cols()); }
  int candidates() const { return static_cast<int>(probs.rows()); }
  bool empty_support() const { return support_count == 0; }

  // Candidate class behind row `row` (class indices ascending, skipping the
  // predicted class), and the inverse mapping.
  int candidate_class(int row) const;
  int row_of_class(int cls) const;

  void validate() const;
};

// Tallies rank occupancies over the correctly predicted samples of
// `target_class`. Ties in a logit row resolve to the lowest class index.
// Zero-support classes yield an all-zero matrix (flagged by support_count).
// Requires labels, 1 <= k <= C-1, and 0 <= target_class < C.
RankProbabilityMatrix compute_rpm(const LogitMatrix& logits, int target_class,
                                  int k);
// k defaults to C - 1 (the full ranking below the predicted class).
RankProbabilityMatrix compute_rpm(const LogitMatrix& logits, int target_class);

// One RPM per class, in class order.
std::vector<RankProbabilityMatrix> compute_all_rpms(const LogitMatrix& logits,
                                                    int k);

// CSV carries a metadata line (predicted class, support, shape) followed by
// a header and one row per candidate class; values use %.17g.
void save_rpm_csv(const RankProbabilityMatrix& rpm,
                  const std::filesystem::path& path);
RankProbabilityMatrix load_rpm_csv(const std::filesystem::path& path);

// Binary reuses the tensor container for the probability matrix; the
// metadata travels separately (predicted class and support are the caller's).
// The container is float32, so this path truncates; CSV is the exact one.
// Requires k >= 2 (the container needs two columns).
void save_rpm_binary(const RankProbabilityMatrix& rpm,
                     const std::filesystem::path& path);
RankProbabilityMatrix load_rpm_binary(const std::filesystem::path& path,
                                      int predicted_class, int64_t support_count);

}  // namespace rankood
