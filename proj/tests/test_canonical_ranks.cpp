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

#include <doctest.h>

#include <random>

#include "rankood/canonical_ranks.hpp"
#include "test_util.hpp"

using namespace rankood;
using testutil::TempDir;

namespace {

RankProbabilityMatrix make_rpm(int num_classes, int predicted, MatrixD probs,
                               int64_t support = 100) {
  RankProbabilityMatrix rpm;
  rpm.num_classes = num_classes;
  rpm.predicted_class = predicted;
  rpm.support_count = support;
  rpm.probs = std::move(probs);
  return rpm;
}

// Column-stochastic random RPM with dyadic entries (counts over 64), so
// every achievable objective value is exact in double and mathematically
// equal optima compare bitwise equal. Exact ties are common by design.
RankProbabilityMatrix random_dyadic_rpm(std::mt19937_64& rng, int num_classes,
                                        int k) {
  const int m = num_classes - 1;
  MatrixD probs(m, k);
  for (int j = 0; j < k; ++j) {
    // Random composition of 64 into m non-negative parts.
    std::vector<int> cuts;
    cuts.push_back(0);
    for (int i = 0; i < m - 1; ++i) {
      cuts.push_back(static_cast<int>(rng() % 65));
    }
    cuts.push_back(64);
    std::sort(cuts.begin(), cuts.end());
    for (int r = 0; r < m; ++r) {
      probs(r, j) = static_cast<double>(cuts[static_cast<size_t>(r + 1)] -
                                        cuts[static_cast<size_t>(r)]) /
                    64.0;
    }
  }
  return make_rpm(num_classes, static_cast<int>(rng() % num_classes),
                  std::move(probs));
}

RankProbabilityMatrix random_continuous_rpm(std::mt19937_64& rng,
                                            int num_classes, int k) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int m = num_classes - 1;
  MatrixD probs(m, k);
  for (int j = 0; j < k; ++j) {
    double sum = 0.0;
    for (int r = 0; r < m; ++r) {
      probs(r, j) = uniform(rng) + 1e-6;
      sum += probs(r, j);
    }
    probs.col(j) /= sum;
  }
  return make_rpm(num_classes, static_cast<int>(rng() % num_classes),
                  std::move(probs));
}

}  // namespace

TEST_CASE("five-class fixture yields the known optimal ranking") {
  const RankProbabilityMatrix rpm =
      compute_rpm(testutil::make_rank_fixture(), 1, 3);
  const CanonicalRanking ranking = solve_assignment(rpm);

  CHECK(ranking.permutation == std::vector<int>{1, 0, 2, 3});
  CHECK(ranking.objective_value == doctest::Approx(2.54).epsilon(1e-12));
  CHECK(ranking.support_count == 100);

  const CanonicalRanking brute = solve_assignment_bruteforce(rpm);
  CHECK(brute.permutation == ranking.permutation);
  CHECK(brute.objective_value == ranking.objective_value);
}

TEST_CASE("identity-like profits select the diagonal") {
  const int c = 5;
  MatrixD probs = MatrixD::Identity(c - 1, c - 1);
  const CanonicalRanking ranking =
      solve_assignment(make_rpm(c, 0, std::move(probs)));
  CHECK(ranking.permutation == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(ranking.objective_value == 4.0);
}

TEST_CASE("two-by-two brute force fixture") {
  MatrixD probs(2, 2);
  probs << 0.6, 0.4,
           0.5, 0.9;
  const auto rpm = make_rpm(3, 2, probs);  // candidates are classes 0 and 1
  const CanonicalRanking brute = solve_assignment_bruteforce(rpm);
  CHECK(brute.permutation == std::vector<int>{2, 0, 1});
  CHECK(brute.objective_value == 1.5);
  const CanonicalRanking ranking = solve_assignment(rpm);
  CHECK(ranking.permutation == brute.permutation);
  CHECK(ranking.objective_value == brute.objective_value);
}

TEST_CASE("single candidate, single rank") {
  MatrixD probs(1, 1);
  probs << 1.0;
  const CanonicalRanking ranking = solve_assignment(make_rpm(2, 0, probs));
  CHECK(ranking.permutation == std::vector<int>{0, 1});
  CHECK(ranking.objective_value == 1.0);
}

TEST_CASE("equal profits pick the lexicographically smallest permutation") {
  // Every assignment scores 1.0; the winner must be 1, 2, 3 in rank order.
  MatrixD probs = MatrixD::Constant(3, 3, 1.0 / 3.0);
  const auto rpm = make_rpm(4, 0, probs);
  const CanonicalRanking ranking = solve_assignment(rpm);
  CHECK(ranking.permutation == std::vector<int>{0, 1, 2, 3});
  CHECK(solve_assignment_bruteforce(rpm).permutation == ranking.permutation);
}

TEST_CASE("rectangular case leaves the worst candidates unranked") {
  // K = 2 ranks, 3 candidates; class 3 contributes nothing anywhere.
  MatrixD probs(3, 2);
  probs << 0.5, 0.25,
           0.25, 0.75,
           0.25, 0.0;
  const CanonicalRanking ranking = solve_assignment(make_rpm(4, 0, probs));
  CHECK(ranking.permutation == std::vector<int>{0, 1, 2});
  CHECK(ranking.objective_value == 1.25);
}

TEST_CASE("solver matches brute force on random dyadic instances") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 400; ++trial) {
    const int c = 3 + static_cast<int>(rng() % 5);  // up to 7 classes
    const int k = 1 + static_cast<int>(rng() % (c - 1));
    const RankProbabilityMatrix rpm = random_dyadic_rpm(rng, c, k);
    const CanonicalRanking fast = solve_assignment(rpm);
    const CanonicalRanking brute = solve_assignment_bruteforce(rpm);
    REQUIRE(fast.objective_value == brute.objective_value);
    REQUIRE(fast.permutation == brute.permutation);
  }
}

TEST_CASE("solver matches brute force on random continuous instances") {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 3 + static_cast<int>(rng() % 5);
    const int k = 1 + static_cast<int>(rng() % (c - 1));
    const RankProbabilityMatrix rpm = random_continuous_rpm(rng, c, k);
    const CanonicalRanking fast = solve_assignment(rpm);
    const CanonicalRanking brute = solve_assignment_bruteforce(rpm);
    REQUIRE(fast.objective_value ==
            doctest::Approx(brute.objective_value).epsilon(1e-12));
    REQUIRE(fast.permutation == brute.permutation);
  }
}

TEST_CASE("every output is a valid injection of candidates into ranks") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 3 + static_cast<int>(rng() % 6);
    const int k = 1 + static_cast<int>(rng() % (c - 1));
    const RankProbabilityMatrix rpm = random_continuous_rpm(rng, c, k);
    const CanonicalRanking ranking = solve_assignment(rpm);
    ranking.validate(c);  // throws on repeats or bad indices
    CHECK(ranking.k() == k);
    CHECK(ranking.permutation[0] == rpm.predicted_class);
  }
}

TEST_CASE("scaling all profits leaves the permutation fixed") {
  std::mt19937_64 rng(104);
  for (const double lambda : {0.25, 2.0, 64.0}) {
    const RankProbabilityMatrix rpm = random_continuous_rpm(rng, 6, 4);
    RankProbabilityMatrix scaled = rpm;
    scaled.probs *= lambda;
    const CanonicalRanking a = solve_assignment(rpm);
    const CanonicalRanking b = solve_assignment(scaled);
    CHECK(a.permutation == b.permutation);
    CHECK(b.objective_value ==
          doctest::Approx(lambda * a.objective_value).epsilon(1e-12));
  }
}

TEST_CASE("zero support and infeasible shapes are rejected") {
  MatrixD probs = MatrixD::Zero(3, 2);
  CHECK_THROWS_AS(solve_assignment(make_rpm(4, 0, probs, 0)), ValidationError);

  MatrixD wide = MatrixD::Constant(2, 3, 0.5);  // more ranks than candidates
  CHECK_THROWS_AS(solve_assignment(make_rpm(3, 0, wide)), ValidationError);

  MatrixD negative = MatrixD::Constant(3, 2, -0.1);
  CHECK_THROWS_AS(solve_assignment(make_rpm(4, 0, negative)), ValidationError);
}

TEST_CASE("brute force guard rejects large candidate sets") {
  MatrixD probs = MatrixD::Constant(9, 2, 0.1);
  CHECK_THROWS_AS(solve_assignment_bruteforce(make_rpm(10, 0, probs)),
                  ValidationError);
}

TEST_CASE("canonical table round trips through json") {
  TempDir dir("canon_json");
  std::mt19937_64 rng(105);
  std::vector<RankProbabilityMatrix> rpms;
  for (int cls = 0; cls < 5; ++cls) {
    RankProbabilityMatrix rpm = random_continuous_rpm(rng, 5, 4);
    rpm.predicted_class = cls;
    rpm.support_count = 10 + cls;
    rpms.push_back(std::move(rpm));
  }
  const CanonicalTable table = solve_all(rpms);
  save_canonical_table(table, 5, dir / "canonical.json");

  int num_classes = 0;
  const CanonicalTable back =
      load_canonical_table(dir / "canonical.json", &num_classes);
  CHECK(num_classes == 5);
  REQUIRE(back.size() == table.size());
  for (const auto& [cls, ranking] : table) {
    const auto& loaded = back.at(cls);
    CHECK(loaded.permutation == ranking.permutation);
    CHECK(loaded.objective_value == ranking.objective_value);
    CHECK(loaded.support_count == ranking.support_count);
  }
}

TEST_CASE("table validation catches empty tables and bad keys") {
  std::mt19937_64 rng(106);
  RankProbabilityMatrix rpm = random_continuous_rpm(rng, 4, 3);
  rpm.predicted_class = 0;
  CanonicalTable table;
  table[0] = solve_assignment(rpm);

  CHECK_THROWS_AS(validate_table(CanonicalTable{}, 4), ValidationError);

  CanonicalTable mismatched = table;
  mismatched[1] = table[0];  // key 1 holds a ranking for class 0
  CHECK_THROWS_AS(validate_table(mismatched, 4), ValidationError);
}
