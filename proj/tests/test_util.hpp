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

#include <unistd.h>

#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rankood/types.hpp"

namespace rankood::testutil {

// Unique working directory under the system temp root, removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("rankood_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const {
    return path / name;
  }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline LogitMatrix random_logits(int rows, int cols, uint64_t seed,
                                 bool with_labels) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(-30.0, 30.0);
  LogitMatrix m;
  m.data.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m.data(r, c) = static_cast<float>(value(rng));
    }
  }
  if (with_labels) {
    VectorI labels(rows);
    for (int r = 0; r < rows; ++r) {
      labels(r) = static_cast<int>(rng() % static_cast<uint64_t>(cols));
    }
    m.labels = std::move(labels);
  }
  return m;
}

// Five-class logits whose rank tallies for label 1 are known in closed form:
// 100 correctly predicted samples with hand-placed orderings, giving rank
// occupancy counts (class 0: 80/15/0, class 2: 5/75/1, class 3: 0/0/99,
// class 4: 15/10/0) over ranks 1..3. The unique optimal rank assignment is
// 0 -> rank 1, 2 -> rank 2, 3 -> rank 3 with objective 2.54.
inline LogitMatrix make_rank_fixture() {
  // (count, full class order from rank 0 to rank 4), label is always 1.
  const std::vector<std::pair<int, std::array<int, 5>>> kinds = {
      {70, {1, 0, 2, 3, 4}}, {10, {1, 0, 4, 3, 2}}, {5, {1, 2, 0, 3, 4}},
      {9, {1, 4, 0, 3, 2}},  {5, {1, 4, 2, 3, 0}},  {1, {1, 4, 0, 2, 3}}};
  LogitMatrix m;
  m.data.resize(100, 5);
  VectorI labels(100);
  Eigen::Index row = 0;
  for (const auto& [count, order] : kinds) {
    for (int i = 0; i < count; ++i, ++row) {
      for (int pos = 0; pos < 5; ++pos) {
        m.data(row, order[static_cast<size_t>(pos)]) =
            static_cast<float>(10 - 2 * pos);
      }
      labels(row) = 1;
    }
  }
  m.labels = std::move(labels);
  return m;
}

}  // namespace rankood::testutil
