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

#include <algorithm>
#include <map>
#include <random>

#include "rankood/rank_stats.hpp"
#include "test_util.hpp"

using namespace rankood;
using testutil::TempDir;

namespace {

// Independent tally: straight nested loops over samples, no shared helpers.
MatrixD oracle_rpm(const LogitMatrix& lm, int target, int k, int64_t* support) {
  const int c = static_cast<int>(lm.cols());
  MatrixD counts = MatrixD::Zero(c - 1, k);
  *support = 0;
  for (Eigen::Index n = 0; n < lm.rows(); ++n) {
    if ((*lm.labels)(n) != target) continue;
    // Sort class indices by logit descending, lowest index first on ties.
    std::vector<int> order(static_cast<size_t>(c));
    for (int i = 0; i < c; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (lm.data(n, a) != lm.data(n, b)) return lm.data(n, a) > lm.data(n, b);
      return a < b;
    });
    if (order[0] != target) continue;
    ++*support;
    for (int j = 1; j <= k; ++j) {
      const int cls = order[static_cast<size_t>(j)];
      counts(cls < target ? cls : cls - 1, j - 1) += 1.0;
    }
  }
  if (*support > 0) counts /= static_cast<double>(*support);
  return counts;
}

}  // namespace

TEST_CASE("five-class fixture reproduces the known occupancy ratios") {
  const LogitMatrix lm = testutil::make_rank_fixture();
  const RankProbabilityMatrix rpm = compute_rpm(lm, 1, 3);

  CHECK(rpm.support_count == 100);
  CHECK(rpm.predicted_class == 1);
  REQUIRE(rpm.k() == 3);
  REQUIRE(rpm.candidates() == 4);

  // Rows are candidate classes 0, 2, 3, 4. All ratios are exact in double.
  CHECK(rpm.probs(rpm.row_of_class(0), 0) == 0.80);
  CHECK(rpm.probs(rpm.row_of_class(0), 1) == 0.15);
  CHECK(rpm.probs(rpm.row_of_class(2), 1) == 0.75);
  CHECK(rpm.probs(rpm.row_of_class(2), 2) == 0.01);
  CHECK(rpm.probs(rpm.row_of_class(3), 2) == 0.99);
  CHECK(rpm.probs(rpm.row_of_class(4), 0) == 0.15);
  CHECK(rpm.probs(rpm.row_of_class(4), 1) == 0.10);
}

TEST_CASE("single correct sample yields one-hot columns") {
  LogitMatrix lm;
  lm.data.resize(1, 4);
  lm.data << 5.0f, 3.0f, 2.0f, 1.0f;
  VectorI labels(1);
  labels << 0;
  lm.labels = labels;

  const RankProbabilityMatrix rpm = compute_rpm(lm, 0, 3);
  CHECK(rpm.support_count == 1);
  // Candidate rows are classes 1, 2, 3; ranks follow the logit order.
  CHECK(rpm.probs(0, 0) == 1.0);
  CHECK(rpm.probs(1, 1) == 1.0);
  CHECK(rpm.probs(2, 2) == 1.0);
  CHECK(rpm.probs.sum() == 3.0);
}

TEST_CASE("misclassified and other-class samples are excluded") {
  LogitMatrix lm;
  lm.data.resize(3, 3);
  lm.data << 5.0f, 1.0f, 0.0f,   // label 0, correct
             1.0f, 5.0f, 0.0f,   // label 0, misclassified as 1
             0.0f, 1.0f, 5.0f;   // label 2, not the target class
  VectorI labels(3);
  labels << 0, 0, 2;
  lm.labels = labels;

  const RankProbabilityMatrix rpm = compute_rpm(lm, 0, 2);
  CHECK(rpm.support_count == 1);
  CHECK(rpm.probs(0, 0) == 1.0);  // class 1 at rank 1
  CHECK(rpm.probs(1, 1) == 1.0);  // class 2 at rank 2
}

TEST_CASE("ties resolve to the lowest class index") {
  LogitMatrix lm;
  lm.data.resize(2, 3);
  lm.data << 5.0f, 5.0f, 1.0f,   // argmax tie 0 vs 1 -> 0
             3.0f, 5.0f, 3.0f;   // rank-1 tie 0 vs 2 -> 0
  VectorI labels(2);
  labels << 0, 1;
  lm.labels = labels;

  const RankProbabilityMatrix for0 = compute_rpm(lm, 0, 2);
  CHECK(for0.support_count == 1);  // the tie counts as predicting class 0

  const RankProbabilityMatrix for1 = compute_rpm(lm, 1, 2);
  CHECK(for1.support_count == 1);
  CHECK(for1.probs(for1.row_of_class(0), 0) == 1.0);
  CHECK(for1.probs(for1.row_of_class(2), 1) == 1.0);
}

TEST_CASE("random logits match the independent tally oracle") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int c = 6;
  LogitMatrix lm;
  lm.data.resize(200, c);
  VectorI labels(200);
  for (Eigen::Index n = 0; n < 200; ++n) {
    const int y = static_cast<int>(rng() % c);
    labels(n) = y;
    for (int j = 0; j < c; ++j) {
      lm.data(n, j) = static_cast<float>(noise(rng) + (j == y ? 2.0 : 0.0));
    }
  }
  lm.labels = labels;

  for (int target = 0; target < c; ++target) {
    for (const int k : {1, 3, c - 1}) {
      const RankProbabilityMatrix rpm = compute_rpm(lm, target, k);
      int64_t support = 0;
      const MatrixD expected = oracle_rpm(lm, target, k, &support);
      CHECK(rpm.support_count == support);
      CHECK((rpm.probs - expected).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("columns are stochastic whenever support is positive") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = 3 + static_cast<int>(rng() % 6);
    const int rows = 5 + static_cast<int>(rng() % 60);
    LogitMatrix lm = testutil::random_logits(rows, c, rng(), true);
    const int target = static_cast<int>(rng() % c);
    const int k = 1 + static_cast<int>(rng() % (c - 1));
    const RankProbabilityMatrix rpm = compute_rpm(lm, target, k);
    for (int j = 0; j < k; ++j) {
      const double col = rpm.probs.col(j).sum();
      if (rpm.support_count > 0) {
        CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
      } else {
        CHECK(col == 0.0);
      }
    }
    CHECK(rpm.probs.minCoeff() >= 0.0);
    CHECK(rpm.probs.maxCoeff() <= 1.0);
  }
}

TEST_CASE("support counts correct predictions of the class exactly") {
  LogitMatrix lm = testutil::random_logits(300, 5, 77, true);
  for (int target = 0; target < 5; ++target) {
    int64_t expected = 0;
    for (Eigen::Index n = 0; n < lm.rows(); ++n) {
      if ((*lm.labels)(n) != target) continue;
      int arg = 0;
      for (int j = 1; j < 5; ++j) {
        if (lm.data(n, j) > lm.data(n, arg)) arg = j;
      }
      if (arg == target) ++expected;
    }
    CHECK(compute_rpm(lm, target, 4).support_count == expected);
  }
}

TEST_CASE("class relabeling permutes rows consistently") {
  LogitMatrix lm = testutil::random_logits(120, 5, 55, true);
  const std::vector<int> sigma = {3, 0, 4, 1, 2};  // relabeling map

  LogitMatrix relabeled;
  relabeled.data.resize(lm.rows(), lm.cols());
  VectorI labels(lm.rows());
  for (Eigen::Index n = 0; n < lm.rows(); ++n) {
    for (int j = 0; j < 5; ++j) {
      relabeled.data(n, sigma[static_cast<size_t>(j)]) = lm.data(n, j);
    }
    labels(n) = sigma[static_cast<size_t>((*lm.labels)(n))];
  }
  relabeled.labels = labels;

  const int target = 2;
  const RankProbabilityMatrix a = compute_rpm(lm, target, 4);
  const RankProbabilityMatrix b = compute_rpm(relabeled, sigma[target], 4);
  CHECK(a.support_count == b.support_count);
  for (int cls = 0; cls < 5; ++cls) {
    if (cls == target) continue;
    for (int j = 0; j < 4; ++j) {
      CHECK(a.probs(a.row_of_class(cls), j) ==
            b.probs(b.row_of_class(sigma[static_cast<size_t>(cls)]), j));
    }
  }
}

TEST_CASE("class without correct predictions yields a flagged zero matrix") {
  LogitMatrix lm;
  lm.data.resize(2, 3);
  lm.data << 1.0f, 5.0f, 0.0f,  // label 0 predicted as 1
             2.0f, 5.0f, 0.0f;
  VectorI labels(2);
  labels << 0, 0;
  lm.labels = labels;

  const RankProbabilityMatrix rpm = compute_rpm(lm, 0, 2);
  CHECK(rpm.empty_support());
  CHECK(rpm.probs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("argument validation") {
  LogitMatrix lm = testutil::random_logits(5, 4, 1, true);
  CHECK_THROWS_AS(compute_rpm(lm, 0, 0), ValidationError);
  CHECK_THROWS_AS(compute_rpm(lm, 0, 4), ValidationError);
  CHECK_THROWS_AS(compute_rpm(lm, -1, 2), ValidationError);
  CHECK_THROWS_AS(compute_rpm(lm, 4, 2), ValidationError);

  LogitMatrix unlabeled = testutil::random_logits(5, 4, 1, false);
  CHECK_THROWS_AS(compute_rpm(unlabeled, 0, 2), ValidationError);
}

TEST_CASE("csv round trip is exact") {
  TempDir dir("rpm_csv");
  const LogitMatrix lm = testutil::make_rank_fixture();
  const RankProbabilityMatrix rpm = compute_rpm(lm, 1, 3);
  save_rpm_csv(rpm, dir / "rpm.csv");
  const RankProbabilityMatrix back = load_rpm_csv(dir / "rpm.csv");
  CHECK(back.predicted_class == rpm.predicted_class);
  CHECK(back.num_classes == rpm.num_classes);
  CHECK(back.support_count == rpm.support_count);
  CHECK((back.probs - rpm.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("binary round trip carries the matrix within float precision") {
  TempDir dir("rpm_bin");
  const LogitMatrix lm = testutil::make_rank_fixture();
  const RankProbabilityMatrix rpm = compute_rpm(lm, 1, 3);
  save_rpm_binary(rpm, dir / "rpm.rkod");
  const RankProbabilityMatrix back =
      load_rpm_binary(dir / "rpm.rkod", rpm.predicted_class, rpm.support_count);
  CHECK((back.probs - rpm.probs).cwiseAbs().maxCoeff() < 1e-7);
}
