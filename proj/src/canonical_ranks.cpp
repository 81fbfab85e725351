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

#include "rankood/canonical_ranks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>

namespace rankood {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Square min-cost assignment via shortest augmenting paths (Jonker-Volgenant
// style dual updates). cost is n x n; returns row_of_col. The rank-occupancy
// problem is tiny (n <= C - 1), so no scaling tricks are needed.
void lap_square(const MatrixD& cost, std::vector<int>& row_of_col) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0);    // column -> row, 1-based
  std::vector<int> way(static_cast<size_t>(n) + 1, 0);  // augmenting path links
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                           v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  row_of_col.assign(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j) row_of_col[static_cast<size_t>(j - 1)] = p[static_cast<size_t>(j)] - 1;
}

// Maximum-profit rectangular assignment, rows >= cols. Pads with zero-profit
// dummy columns to square, then minimizes the negated profits. The value is
// re-summed from the chosen profits in column order so equal optima compare
// bitwise equal.
double assign_max(const MatrixD& profit, std::vector<int>* row_of_col_out) {
  const int rows = static_cast<int>(profit.rows());
  const int cols = static_cast<int>(profit.cols());
  if (cols == 0) {
    if (row_of_col_out) row_of_col_out->clear();
    return 0.0;
  }
  MatrixD cost = MatrixD::Zero(rows, rows);
  cost.leftCols(cols) = -profit;
  std::vector<int> row_of_col;
  lap_square(cost, row_of_col);
  double value = 0.0;
  for (int j = 0; j < cols; ++j) value += profit(row_of_col[static_cast<size_t>(j)], j);
  if (row_of_col_out) {
    row_of_col_out->assign(row_of_col.begin(), row_of_col.begin() + cols);
  }
  return value;
}

// The solver accepts any non-negative profit matrix in RPM shape (scaled
// RPMs are legitimate inputs), so this deliberately skips the column
// stochasticity check of RankProbabilityMatrix::validate.
void check_solvable(const RankProbabilityMatrix& rpm) {
  if (rpm.num_classes < 2 || rpm.predicted_class < 0 ||
      rpm.predicted_class >= rpm.num_classes) {
    throw ValidationError("assignment input has a bad class index");
  }
  if (rpm.candidates() != rpm.num_classes - 1 || rpm.k() < 1) {
    throw ValidationError("assignment input has a bad shape");
  }
  for (int r = 0; r < rpm.candidates(); ++r) {
    for (int j = 0; j < rpm.k(); ++j) {
      const double p = rpm.probs(r, j);
      if (!std::isfinite(p) || p < 0.0) {
        throw ValidationError("assignment profits must be finite and "
                              "non-negative");
      }
    }
  }
  if (rpm.empty_support()) {
    throw ValidationError("class " + std::to_string(rpm.predicted_class) +
                          " has no correctly predicted samples; no canonical "
                          "ranking exists");
  }
  if (rpm.k() > rpm.candidates()) {
    throw ValidationError("assignment infeasible: " + std::to_string(rpm.k()) +
                          " ranks but only " + std::to_string(rpm.candidates()) +
                          " candidate classes");
  }
}

}  // namespace

void CanonicalRanking::validate(int num_classes) const {
  if (permutation.empty() || permutation[0] != predicted_class) {
    throw ValidationError("canonical ranking must start with its class");
  }
  if (k() < 1 || k() > num_classes - 1) {
    throw ValidationError("canonical ranking length out of range");
  }
  std::vector<char> seen(static_cast<size_t>(num_classes), 0);
  for (const int cls : permutation) {
    if (cls < 0 || cls >= num_classes) {
      throw ValidationError("canonical ranking names class " +
                            std::to_string(cls) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    if (seen[static_cast<size_t>(cls)]) {
      throw ValidationError("canonical ranking repeats class " +
                            std::to_string(cls));
    }
    seen[static_cast<size_t>(cls)] = 1;
  }
  if (!std::isfinite(objective_value) || objective_value < -1e-12) {
    throw ValidationError("canonical ranking objective must be finite and "
                          "non-negative");
  }
}

CanonicalRanking solve_assignment(const RankProbabilityMatrix& rpm) {
  check_solvable(rpm);
  const int k = rpm.k();
  const int m = rpm.candidates();

  // Fix ranks left to right. For rank j, try each unused candidate in
  // ascending class order and keep the first one whose profit plus the exact
  // optimum of the remaining subproblem attains the best total. This yields
  // the lexicographically smallest optimal class sequence; candidate sums are
  // formed in identical column order, so equal optima tie bitwise.
  std::vector<int> avail(static_cast<size_t>(m));
  for (int r = 0; r < m; ++r) avail[static_cast<size_t>(r)] = r;

  CanonicalRanking result;
  result.predicted_class = rpm.predicted_class;
  result.support_count = rpm.support_count;
  result.permutation.reserve(static_cast<size_t>(k) + 1);
  result.permutation.push_back(rpm.predicted_class);

  for (int j = 0; j < k; ++j) {
    const int rest_cols = k - j - 1;
    double best_value = -kInf;
    int best_pos = -1;
    for (size_t pos = 0; pos < avail.size(); ++pos) {
      double rest = 0.0;
      if (rest_cols > 0) {
        MatrixD sub(static_cast<Eigen::Index>(avail.size()) - 1, rest_cols);
        Eigen::Index sr = 0;
        for (size_t q = 0; q < avail.size(); ++q) {
          if (q == pos) continue;
          sub.row(sr++) = rpm.probs.row(avail[q]).segment(j + 1, rest_cols);
        }
        rest = assign_max(sub, nullptr);
      }
      const double value = rpm.probs(avail[pos], j) + rest;
      if (value > best_value) {
        best_value = value;
        best_pos = static_cast<int>(pos);
      }
    }
    const int row = avail[static_cast<size_t>(best_pos)];
    result.permutation.push_back(rpm.candidate_class(row));
    avail.erase(avail.begin() + best_pos);
  }

  double objective = 0.0;
  for (int j = 1; j <= k; ++j) {
    objective += rpm.probs(rpm.row_of_class(result.permutation[static_cast<size_t>(j)]), j - 1);
  }
  result.objective_value = objective;
  result.validate(rpm.num_classes);
  return result;
}

CanonicalRanking solve_assignment_bruteforce(const RankProbabilityMatrix& rpm) {
  check_solvable(rpm);
  const int k = rpm.k();
  const int m = rpm.candidates();
  if (m > 8) {
    throw ValidationError("brute-force assignment guarded to 8 candidates, got " +
                          std::to_string(m));
  }

  std::vector<int> current(static_cast<size_t>(k), -1);
  std::vector<int> best;
  double best_value = -kInf;
  std::vector<char> used(static_cast<size_t>(m), 0);

  // Depth-first over rank columns, candidates ascending: the first optimum
  // found is the lexicographically smallest one. Only strictly larger sums
  // replace it.
  auto dfs = [&](auto&& self, int j, double acc) -> void {
    if (j == k) {
      if (acc > best_value) {
        best_value = acc;
        best = current;
      }
      return;
    }
    for (int r = 0; r < m; ++r) {
      if (used[static_cast<size_t>(r)]) continue;
      used[static_cast<size_t>(r)] = 1;
      current[static_cast<size_t>(j)] = r;
      self(self, j + 1, acc + rpm.probs(r, j));
      used[static_cast<size_t>(r)] = 0;
    }
  };
  dfs(dfs, 0, 0.0);

  CanonicalRanking result;
  result.predicted_class = rpm.predicted_class;
  result.support_count = rpm.support_count;
  result.permutation.push_back(rpm.predicted_class);
  for (const int r : best) result.permutation.push_back(rpm.candidate_class(r));
  result.objective_value = best_value;
  result.validate(rpm.num_classes);
  return result;
}

CanonicalTable solve_all(const std::vector<RankProbabilityMatrix>& rpms) {
  CanonicalTable table;
  for (const auto& rpm : rpms) {
    table[rpm.predicted_class] = solve_assignment(rpm);
  }
  return table;
}

void validate_table(const CanonicalTable& table, int num_classes) {
  if (table.empty()) throw ValidationError("empty canonical table");
  int k = -1;
  for (const auto& [cls, ranking] : table) {
    if (cls != ranking.predicted_class) {
      throw ValidationError("canonical table key " + std::to_string(cls) +
                            " does not match ranking class " +
                            std::to_string(ranking.predicted_class));
    }
    ranking.validate(num_classes);
    if (k < 0) k = ranking.k();
    if (ranking.k() != k) {
      throw ValidationError("canonical table mixes rank counts");
    }
  }
}

void save_canonical_table(const CanonicalTable& table, int num_classes,
                          const std::filesystem::path& path) {
  validate_table(table, num_classes);
  nlohmann::json doc;
  doc["n_classes"] = num_classes;
  doc["k"] = table.begin()->second.k();
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, ranking] : table) {
    classes[std::to_string(cls)] = {{"permutation", ranking.permutation},
                                    {"objective_value", ranking.objective_value},
                                    {"support_count", ranking.support_count}};
  }
  doc["classes"] = std::move(classes);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << doc.dump(2) << '\n';
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

CanonicalTable load_canonical_table(const std::filesystem::path& path,
                                    int* num_classes_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for reading");
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad canonical table " + path.string() + ": " + e.what());
  }
  CanonicalTable table;
  int num_classes = 0;
  try {
    num_classes = doc.at("n_classes").get<int>();
    for (const auto& [key, value] : doc.at("classes").items()) {
      CanonicalRanking ranking;
      ranking.predicted_class = std::stoi(key);
      ranking.permutation = value.at("permutation").get<std::vector<int>>();
      ranking.objective_value = value.at("objective_value").get<double>();
      ranking.support_count = value.at("support_count").get<int64_t>();
      table[ranking.predicted_class] = std::move(ranking);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad canonical table " + path.string() + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError("bad canonical table " + path.string() + ": " + e.what());
  }
  validate_table(table, num_classes);
  if (num_classes_out) *num_classes_out = num_classes;
  return table;
}

}  // namespace rankood
