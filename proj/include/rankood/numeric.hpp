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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rankood/errors.hpp"
#include "rankood/types.hpp"

namespace rankood {

// log(exp(a) + exp(b)) without overflow. Exact when one side dominates.
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (std::isinf(a) && a < 0) return a;  // both -inf
  return a + std::log1p(std::exp(b - a));
}

// Max-subtracted log-sum-exp. Stable for the logit magnitudes seen after
// convergence (roughly -60..+55, where naive exp overflows).
template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  const auto vd = v.template cast<double>().eval();
  const double m = vd.maxCoeff();
  if (std::isinf(m)) return m;
  return m + std::log((vd.array() - m).exp().sum());
}

template <typename Derived>
VectorD log_softmax(const Eigen::MatrixBase<Derived>& v) {
  const double lse = log_sum_exp(v);
  return v.template cast<double>().array() - lse;
}

template <typename Derived>
VectorD softmax(const Eigen::MatrixBase<Derived>& v) {
  return log_softmax(v).array().exp();
}

// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

// Indices sorted by value descending; equal values keep ascending index
// order, so rank assignment is deterministic.
template <typename Derived>
std::vector<int> descending_order(const Eigen::MatrixBase<Derived>& v) {
  std::vector<int> idx(static_cast<size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return v(a) > v(b); });
  return idx;
}

// Nearest-rank percentile index into a sorted sample of size n: the 1-based
// position ceil(p * n), clamped to [1, n]. The tiny epsilon keeps exact
// products like 0.95 * 20 from being rounded up by float error.
inline int nearest_rank_index(double percentile, int n) {
  if (n < 1) throw ValidationError("nearest_rank_index: empty sample");
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw ValidationError("nearest_rank_index: percentile must be in (0, 1)");
  }
  int k = static_cast<int>(std::ceil(percentile * n - 1e-9));
  return std::clamp(k, 1, n);
}

// splitmix64; used to derive independent sub-seeds from one pipeline seed.
inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
  uint64_t z = base + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fisher-Yates with an explicit pinned draw rule. std::shuffle is
// implementation-defined, which would break byte-identical reruns across
// standard libraries; tests replicate this exact sequence.
template <typename Rng>
void deterministic_shuffle(std::vector<int>& values, Rng& rng) {
  for (size_t i = values.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace rankood
