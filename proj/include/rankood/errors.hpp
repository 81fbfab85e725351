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

#include <stdexcept>
#include <string>

namespace rankood {

// Error taxonomy mirrored by the CLI exit codes:
//   validation / format / io -> 2, dependency -> 3, numeric -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad inputs: shape mismatches, out-of-range values, broken invariants.
struct ValidationError : Error {
  using Error::Error;
};

// Malformed on-disk payloads (bad magic, truncated file, unparsable CSV).
struct FormatError : ValidationError {
  using ValidationError::ValidationError;
};

struct IoError : Error {
  using Error::Error;
};

// A pipeline stage was asked to consume an artifact that is missing or stale.
struct DependencyError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required (e.g. diverged training).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace rankood
