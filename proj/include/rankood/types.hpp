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

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "rankood/errors.hpp"

namespace rankood {

// Dense row-major types. Row-major matches the on-disk sample layout, so a
// logit matrix maps onto its serialized payload without a transpose.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;
using VectorF = Vector<float>;
using VectorD = Vector<double>;
using VectorI = Vector<int>;

enum class SplitTag { train, val_id, val_ood, test_id, test_ood };

std::string to_string(SplitTag tag);
SplitTag split_tag_from_string(const std::string& name);

// N x C matrix of per-sample class scores (raw classifier logits or, for the
// data stages, feature rows fed to the toy model). Labels are optional; OOD
// splits carry none. Storage is float32 so binary round trips are bit exact.
struct LogitMatrix {
  MatrixF data;
  std::optional<VectorI> labels;
  SplitTag split = SplitTag::train;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
  bool has_labels() const { return labels.has_value(); }

  // Throws ValidationError unless: N >= 1, C >= 2, every entry finite, and
  // (when present) labels has length N with every value in [0, C).
  void validate() const;
};

}  // namespace rankood
