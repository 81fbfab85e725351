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

#include "rankood/types.hpp"

#include <cmath>

namespace rankood {

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::val_id: return "val_id";
    case SplitTag::val_ood: return "val_ood";
    case SplitTag::test_id: return "test_id";
    case SplitTag::test_ood: return "test_ood";
  }
  throw ValidationError("unknown split tag");
}

SplitTag split_tag_from_string(const std::string& name) {
  if (name == "train") return SplitTag::train;
  if (name == "val_id") return SplitTag::val_id;
  if (name == "val_ood") return SplitTag::val_ood;
  if (name == "test_id") return SplitTag::test_id;
  if (name == "test_ood") return SplitTag::test_ood;
  throw ValidationError("unknown split tag: " + name);
}

void LogitMatrix::validate() const {
  if (rows() < 1) throw ValidationError("logit matrix needs at least one row");
  if (cols() < 2) {
    throw ValidationError("logit matrix needs at least two columns");
  }
  for (Eigen::Index r = 0; r < rows(); ++r) {
    for (Eigen::Index c = 0; c < cols(); ++c) {
      if (!std::isfinite(data(r, c))) {
        throw ValidationError("non-finite logit at row " + std::to_string(r) +
                              ", column " + std::to_string(c));
      }
    }
  }
  if (labels) {
    if (labels->size() != rows()) {
      throw ValidationError("label count " + std::to_string(labels->size()) +
                            " does not match row count " +
                            std::to_string(rows()));
    }
    for (Eigen::Index i = 0; i < labels->size(); ++i) {
      const int y = (*labels)(i);
      if (y < 0 || y >= cols()) {
        throw ValidationError("label " + std::to_string(y) + " at row " +
                              std::to_string(i) + " outside [0, " +
                              std::to_string(cols()) + ")");
      }
    }
  }
}

}  // namespace rankood
