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

#include "rankood/rank_stats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rankood/numeric.hpp"
#include "rankood/tensor_io.hpp"

namespace rankood {

int RankProbabilityMatrix::candidate_class(int row) const {
  if (row < 0 || row >= candidates()) {
    throw ValidationError("candidate row " + std::to_string(row) +
                          " outside [0, " + std::to_string(candidates()) + ")");
  }
  return row < predicted_class ? row : row + 1;
}

int RankProbabilityMatrix::row_of_class(int cls) const {
  if (cls < 0 || cls >= num_classes || cls == predicted_class) {
    throw ValidationError("class " + std::to_string(cls) +
                          " is not a candidate of the RPM for class " +
                          std::to_string(predicted_class));
  }
  return cls < predicted_class ? cls : cls - 1;
}

void RankProbabilityMatrix::validate() const {
  if (num_classes < 2) throw ValidationError("RPM needs at least two classes");
  if (predicted_class < 0 || predicted_class >= num_classes) {
    throw ValidationError("RPM predicted class out of range");
  }
  if (candidates() != num_classes - 1) {
    throw ValidationError("RPM row count must be n_classes - 1");
  }
  if (k() < 1 || k() > num_classes - 1) {
    throw ValidationError("RPM rank count must be in [1, n_classes - 1]");
  }
  if (support_count < 0) throw ValidationError("negative RPM support");
  for (int j = 0; j < k(); ++j) {
    double col = 0.0;
    for (int r = 0; r < candidates(); ++r) {
      const double p = probs(r, j);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0 + 1e-12) {
        throw ValidationError("RPM entry outside [0, 1]");
      }
      col += p;
    }
    if (support_count == 0) {
      if (col != 0.0) throw ValidationError("zero-support RPM must be all zero");
    } else if (std::abs(col - 1.0) > 1e-6) {
      // 1e-6 accommodates float32 round trips through the binary container.
      throw ValidationError("RPM column " + std::to_string(j + 1) +
                            " sums to " + std::to_string(col) + ", expected 1");
    }
  }
}

RankProbabilityMatrix compute_rpm(const LogitMatrix& logits, int target_class,
                                  int k) {
  logits.validate();
  if (!logits.labels) {
    throw ValidationError("rank statistics require labeled logits");
  }
  const int c = static_cast<int>(logits.cols());
  if (target_class < 0 || target_class >= c) {
    throw ValidationError("target class " + std::to_string(target_class) +
                          " outside [0, " + std::to_string(c) + ")");
  }
  if (k < 1 || k > c - 1) {
    throw ValidationError("rank count " + std::to_string(k) +
                          " outside [1, " + std::to_string(c - 1) + "]");
  }

  RankProbabilityMatrix rpm;
  rpm.predicted_class = target_class;
  rpm.num_classes = c;
  Matrix<int64_t> counts = Matrix<int64_t>::Zero(c - 1, k);
  for (Eigen::Index n = 0; n < logits.rows(); ++n) {
    if ((*logits.labels)(n) != target_class) continue;
    const auto order = descending_order(logits.data.row(n).transpose());
    if (order[0] != target_class) continue;  // misclassified: excluded
    ++rpm.support_count;
    for (int j = 1; j <= k; ++j) {
      const int row = order[static_cast<size_t>(j)] < target_class
                          ? order[static_cast<size_t>(j)]
                          : order[static_cast<size_t>(j)] - 1;
      counts(row, j - 1) += 1;
    }
  }
  if (rpm.support_count > 0) {
    rpm.probs = counts.cast<double>() / static_cast<double>(rpm.support_count);
  } else {
    rpm.probs = MatrixD::Zero(c - 1, k);
  }
  rpm.validate();
  return rpm;
}

RankProbabilityMatrix compute_rpm(const LogitMatrix& logits, int target_class) {
  return compute_rpm(logits, target_class,
                     static_cast<int>(logits.cols()) - 1);
}

std::vector<RankProbabilityMatrix> compute_all_rpms(const LogitMatrix& logits,
                                                    int k) {
  std::vector<RankProbabilityMatrix> rpms;
  rpms.reserve(static_cast<size_t>(logits.cols()));
  for (int c = 0; c < logits.cols(); ++c) {
    rpms.push_back(compute_rpm(logits, c, k));
  }
  return rpms;
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_rpm_csv(const RankProbabilityMatrix& rpm,
                  const std::filesystem::path& path) {
  rpm.validate();
  std::string out;
  out += "predicted_class," + std::to_string(rpm.predicted_class) +
         ",n_classes," + std::to_string(rpm.num_classes) + ",support_count," +
         std::to_string(rpm.support_count) + ",k," + std::to_string(rpm.k()) +
         "\n";
  out += "class";
  for (int j = 1; j <= rpm.k(); ++j) out += ",rank_" + std::to_string(j);
  out += '\n';
  for (int r = 0; r < rpm.candidates(); ++r) {
    out += std::to_string(rpm.candidate_class(r));
    for (int j = 0; j < rpm.k(); ++j) out += ',' + g17(rpm.probs(r, j));
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << out;
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

RankProbabilityMatrix load_rpm_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(f, line)) {
    throw FormatError("missing metadata line in " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  RankProbabilityMatrix rpm;
  int k = 0;
  {
    std::istringstream meta(line);
    std::string key, value;
    int seen = 0;
    while (std::getline(meta, key, ',') && std::getline(meta, value, ',')) {
      try {
        if (key == "predicted_class") rpm.predicted_class = std::stoi(value);
        else if (key == "n_classes") rpm.num_classes = std::stoi(value);
        else if (key == "support_count") rpm.support_count = std::stoll(value);
        else if (key == "k") k = std::stoi(value);
        else throw FormatError("unknown metadata key '" + key + "' in " + path.string());
      } catch (const std::logic_error&) {
        throw FormatError("bad metadata value '" + value + "' in " + path.string());
      }
      ++seen;
    }
    if (seen != 4) {
      throw FormatError("metadata line of " + path.string() +
                        " must carry exactly four key,value pairs");
    }
  }
  if (rpm.num_classes < 2 || k < 1) {
    throw FormatError("inconsistent metadata in " + path.string());
  }

  if (!std::getline(f, line)) {
    throw FormatError("missing header row in " + path.string());
  }
  rpm.probs = MatrixD::Zero(rpm.num_classes - 1, k);
  int rows_seen = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    if (!std::getline(row, field, ',')) break;
    int cls = 0;
    try {
      cls = std::stoi(field);
    } catch (const std::logic_error&) {
      throw FormatError("bad class field '" + field + "' in " + path.string());
    }
    const int r = rpm.row_of_class(cls);
    for (int j = 0; j < k; ++j) {
      if (!std::getline(row, field, ',')) {
        throw FormatError("short row for class " + std::to_string(cls) +
                          " in " + path.string());
      }
      try {
        rpm.probs(r, j) = std::stod(field);
      } catch (const std::logic_error&) {
        throw FormatError("bad probability '" + field + "' in " + path.string());
      }
    }
    ++rows_seen;
  }
  if (rows_seen != rpm.num_classes - 1) {
    throw FormatError(path.string() + " carries " + std::to_string(rows_seen) +
                      " candidate rows, expected " +
                      std::to_string(rpm.num_classes - 1));
  }
  rpm.validate();
  return rpm;
}

void save_rpm_binary(const RankProbabilityMatrix& rpm,
                     const std::filesystem::path& path) {
  rpm.validate();
  if (rpm.k() < 2) {
    throw ValidationError("binary RPM container needs k >= 2; use CSV");
  }
  LogitMatrix container;
  container.data = rpm.probs.cast<float>();
  write_logits(container, path, TensorFormat::binary);
}

RankProbabilityMatrix load_rpm_binary(const std::filesystem::path& path,
                                      int predicted_class,
                                      int64_t support_count) {
  const LogitMatrix container = read_logits(path, TensorFormat::binary);
  RankProbabilityMatrix rpm;
  rpm.predicted_class = predicted_class;
  rpm.num_classes = static_cast<int>(container.rows()) + 1;
  rpm.support_count = support_count;
  rpm.probs = container.data.cast<double>();
  rpm.validate();
  return rpm;
}

}  // namespace rankood
