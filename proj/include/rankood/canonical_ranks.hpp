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
#include <vector>

#include "rankood/rank_stats.hpp"

namespace rankood {

// Canonical ranking of one class: permutation[0] is the predicted class,
// permutation[1..K] the class assigned to each lower rank. objective_value
// is the summed rank probability mass of that assignment.
struct CanonicalRanking {
  int predicted_class = -1;
  std::vector<int> permutation;
  double objective_value = 0.0;
  int64_t support_count = 0;

  int k() const { return static_cast<int>(permutation.size()) - 1; }
  void validate(int num_classes) const;
};

// Maximum-weight one-to-one assignment of candidate classes to ranks 1..K.
// Exact (shortest augmenting path on the equivalent min-cost problem); among
// equally optimal assignments it returns the one whose class sequence is
// lexicographically smallest. Throws on empty support and on K > C - 1.
CanonicalRanking solve_assignment(const RankProbabilityMatrix& rpm);

// Exhaustive reference: enumerates every candidate-to-rank injection in
// lexicographic order and keeps the first maximum. Guarded to C - 1 <= 8
// candidates; exists as the oracle for the solver.
CanonicalRanking solve_assignment_bruteforce(const RankProbabilityMatrix& rpm);

// class -> canonical ranking, for every class of the classifier.
using CanonicalTable = std::map<int, CanonicalRanking>;

CanonicalTable solve_all(const std::vector<RankProbabilityMatrix>& rpms);

// Every ranking in the table must share one K and agree with num_classes.
void validate_table(const CanonicalTable& table, int num_classes);

void save_canonical_table(const CanonicalTable& table, int num_classes,
                          const std::filesystem::path& path);
CanonicalTable load_canonical_table(const std::filesystem::path& path,
                                    int* num_classes_out = nullptr);

}  // namespace rankood
