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

#include "rankood/metrics_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rankood/numeric.hpp"

namespace rankood {
namespace {

std::vector<double> sorted_finite(const VectorD& v, const char* what) {
  if (v.size() < 1) {
    throw ValidationError(std::string(what) + " score set is empty");
  }
  std::vector<double> out(v.data(), v.data() + v.size());
  for (const double x : out) {
    if (!std::isfinite(x)) {
      throw ValidationError(std::string(what) + " scores contain a non-finite value");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double auroc(const VectorD& id_scores, const VectorD& ood_scores) {
  const auto id = sorted_finite(id_scores, "ID");
  const auto ood = sorted_finite(ood_scores, "OOD");
  // For each OOD score, count ID scores above it (win) and equal (half win).
  // Both sorted, so two binary searches per OOD score. Every contribution is
  // an integer multiple of 0.5: the sum is exact in double.
  double wins = 0.0;
  for (const double s : ood) {
    const auto lo = std::lower_bound(id.begin(), id.end(), s);
    const auto hi = std::upper_bound(lo, id.end(), s);
    wins += static_cast<double>(id.end() - hi) +
            0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

FprResult fpr_at_tpr(const VectorD& id_scores, const VectorD& ood_scores,
                     double tpr) {
  if (!(tpr > 0.0 && tpr <= 1.0)) {
    throw ValidationError("tpr must lie in (0, 1]");
  }
  const auto id = sorted_finite(id_scores, "ID");
  const auto ood = sorted_finite(ood_scores, "OOD");
  const int n = static_cast<int>(id.size());
  // Keep a fraction tpr of ID samples at or above the threshold: take the
  // nearest-rank quantile of the ID scores from the top. tpr == 1 keeps all,
  // so the threshold is the ID minimum.
  double threshold;
  if (tpr == 1.0) {
    threshold = id.front();
  } else {
    const int keep = nearest_rank_index(tpr, n);  // samples kept, from the top
    threshold = id[static_cast<size_t>(n - keep)];
  }
  const auto first_kept =
      std::lower_bound(ood.begin(), ood.end(), threshold);
  FprResult r;
  r.threshold = threshold;
  r.fpr = static_cast<double>(ood.end() - first_kept) /
          static_cast<double>(ood.size());
  return r;
}

ScoreReport make_score_report(const std::string& detector,
                              const VectorD& id_scores,
                              const VectorD& ood_scores) {
  ScoreReport report;
  report.detector = detector;
  report.n_id = id_scores.size();
  report.n_ood = ood_scores.size();
  report.auroc = auroc(id_scores, ood_scores);
  const FprResult f = fpr_at_tpr(id_scores, ood_scores, 0.95);
  report.fpr95 = f.fpr;
  report.threshold = f.threshold;
  return report;
}

double CpMatrix::mean_defined() const {
  double sum = 0.0;
  int64_t count = 0;
  for (const auto& [cls, d] : denom) {
    const VectorD& e = entries.at(cls);
    for (int i = 0; i < k; ++i) {
      if (d(i) > 0) {
        sum += e(i);
        ++count;
      }
    }
  }
  return count > 0 ? sum / static_cast<double>(count)
                   : std::numeric_limits<double>::quiet_NaN();
}

void CpMatrix::validate() const {
  if (num_classes < 2 || k < 1 || k > num_classes - 1) {
    throw ValidationError("CP matrix shape out of range");
  }
  for (const auto& [cls, e] : entries) {
    if (cls < 0 || cls >= num_classes) {
      throw ValidationError("CP matrix names class " + std::to_string(cls));
    }
    const auto& nu = numer.at(cls);
    const auto& de = denom.at(cls);
    if (e.size() != k || nu.size() != k || de.size() != k) {
      throw ValidationError("CP matrix row length mismatch");
    }
    for (int i = 0; i < k; ++i) {
      if (de(i) == 0) {
        if (!std::isnan(e(i))) {
          throw ValidationError("undefined CP entry must be NaN");
        }
      } else if (nu(i) < 0 || nu(i) > de(i) ||
                 e(i) != static_cast<double>(nu(i)) / static_cast<double>(de(i))) {
        throw ValidationError("CP entry does not match its counts");
      }
    }
  }
}

CpMatrix cp_matrix(const LogitMatrix& logits, const CanonicalTable& canon) {
  logits.validate();
  const int c = static_cast<int>(logits.cols());
  validate_table(canon, c);
  const int k = canon.begin()->second.k();

  CpMatrix cp;
  cp.num_classes = c;
  cp.k = k;
  for (const auto& [cls, ranking] : canon) {
    (void)ranking;
    cp.numer[cls] = Vector<int64_t>::Zero(k);
    cp.denom[cls] = Vector<int64_t>::Zero(k);
  }

  for (Eigen::Index n = 0; n < logits.rows(); ++n) {
    const auto order = descending_order(logits.data.row(n).transpose());
    const int pred = order[0];
    const auto it = canon.find(pred);
    if (it == canon.end()) {
      throw ValidationError("no canonical ranking for predicted class " +
                            std::to_string(pred));
    }
    const auto& perm = it->second.permutation;
    auto& nu = cp.numer[pred];
    auto& de = cp.denom[pred];
    // Entry i is conditioned on ranks 1..i-1 matching; walk until the first
    // mismatch, which contributes a denominator but no numerator.
    for (int i = 1; i <= k; ++i) {
      de(i - 1) += 1;
      if (order[static_cast<size_t>(i)] == perm[static_cast<size_t>(i)]) {
        nu(i - 1) += 1;
      } else {
        break;
      }
    }
  }

  for (auto& [cls, nu] : cp.numer) {
    const auto& de = cp.denom[cls];
    VectorD e(k);
    for (int i = 0; i < k; ++i) {
      e(i) = de(i) > 0 ? static_cast<double>(nu(i)) / static_cast<double>(de(i))
                       : std::numeric_limits<double>::quiet_NaN();
    }
    cp.entries[cls] = std::move(e);
  }
  cp.validate();
  return cp;
}

std::vector<RankLogitRow> rank_logit_summary(const LogitMatrix& logits,
                                             const std::vector<int>& positions,
                                             int hist_bins) {
  logits.validate();
  if (positions.empty()) throw ValidationError("no rank positions requested");
  if (hist_bins < 1) throw ValidationError("histogram needs at least one bin");
  const int c = static_cast<int>(logits.cols());
  for (const int pos : positions) {
    if (pos < 0 || pos >= c) {
      throw ValidationError("rank position " + std::to_string(pos) +
                            " outside [0, " + std::to_string(c) + ")");
    }
  }

  const Eigen::Index n = logits.rows();
  MatrixD at_rank(n, static_cast<Eigen::Index>(positions.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto order = descending_order(logits.data.row(r).transpose());
    for (size_t p = 0; p < positions.size(); ++p) {
      at_rank(r, static_cast<Eigen::Index>(p)) =
          logits.data(r, order[static_cast<size_t>(positions[p])]);
    }
  }

  std::vector<RankLogitRow> rows;
  for (size_t p = 0; p < positions.size(); ++p) {
    const VectorD col = at_rank.col(static_cast<Eigen::Index>(p));
    RankLogitRow row;
    row.position = positions[p];
    row.mean = col.mean();
    row.stddev = std::sqrt((col.array() - row.mean).square().sum() /
                           static_cast<double>(n));
    row.hist_lo = col.minCoeff();
    row.hist_hi = col.maxCoeff();
    row.hist_counts.assign(static_cast<size_t>(hist_bins), 0);
    if (row.hist_hi == row.hist_lo) {
      row.hist_counts[0] = n;  // degenerate: everything in the first bin
    } else {
      const double width = (row.hist_hi - row.hist_lo) / hist_bins;
      for (Eigen::Index r = 0; r < n; ++r) {
        int b = static_cast<int>((col(r) - row.hist_lo) / width);
        b = std::clamp(b, 0, hist_bins - 1);
        row.hist_counts[static_cast<size_t>(b)] += 1;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_cp_csv(const CpMatrix& cp, std::ostream& out) {
  out << "class,support";
  for (int i = 1; i <= cp.k; ++i) out << ",cp_rank_" << i;
  for (int i = 1; i <= cp.k; ++i) out << ",numer_" << i << ",denom_" << i;
  out << '\n';
  for (const auto& [cls, e] : cp.entries) {
    const auto& nu = cp.numer.at(cls);
    const auto& de = cp.denom.at(cls);
    out << cls << ',' << de(0);
    for (int i = 0; i < cp.k; ++i) {
      out << ',' << (de(i) > 0 ? g17(e(i)) : "undefined");
    }
    for (int i = 0; i < cp.k; ++i) out << ',' << nu(i) << ',' << de(i);
    out << '\n';
  }
}

void write_summary_csv(const std::vector<RankLogitRow>& rows,
                       std::ostream& out) {
  out << "position,mean,stddev,hist_lo,hist_hi,hist_counts\n";
  for (const auto& row : rows) {
    out << row.position << ',' << g17(row.mean) << ',' << g17(row.stddev) << ','
        << g17(row.hist_lo) << ',' << g17(row.hist_hi) << ',';
    for (size_t i = 0; i < row.hist_counts.size(); ++i) {
      if (i > 0) out << ' ';
      out << row.hist_counts[i];
    }
    out << '\n';
  }
}

void write_reports_csv(const std::vector<ScoreReport>& reports,
                       std::ostream& out) {
  out << "detector,n_id,n_ood,auroc,fpr95,threshold\n";
  for (const auto& r : reports) {
    out << r.detector << ',' << r.n_id << ',' << r.n_ood << ',' << g17(r.auroc)
        << ',' << g17(r.fpr95) << ',' << g17(r.threshold) << '\n';
  }
}

}  // namespace rankood
