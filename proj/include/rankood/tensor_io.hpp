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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rankood/types.hpp"

namespace rankood {

// Binary layout (all integers little endian):
//   magic "RKOD" | u32 version = 1 | u64 n_samples | u32 n_classes |
//   u8 has_labels | float32 row-major payload | u32 labels (if present)
enum class TensorFormat { binary, csv };

// Picks the format from the file extension: ".csv" -> csv, else binary.
TensorFormat format_for_path(const std::filesystem::path& path);

// Validates, writes, and returns the CRC-32 checksum (8 hex digits) of the
// bytes written. CSV uses a mandatory header row and %.17g values, which
// round-trips every float32 exactly.
std::string write_logits(const LogitMatrix& matrix,
                         const std::filesystem::path& path,
                         TensorFormat format);

LogitMatrix read_logits(const std::filesystem::path& path,
                        TensorFormat format);

std::string crc32_hex(const void* data, size_t size);
std::string file_crc32_hex(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  SplitTag split = SplitTag::train;
  int64_t n_samples = 0;
  int n_classes = 0;
  std::string checksum;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  uint64_t seed = 0;
  std::string notes;

  const ManifestEntry* find(SplitTag split) const;
};

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

// Loads the manifest and, when verify_checksums is set, recomputes each
// entry's CRC-32; a mismatch throws ValidationError. Entries must share one
// n_classes value.
DatasetManifest load_manifest(const std::filesystem::path& path,
                              bool verify_checksums = true);

// Reads the tensor behind one manifest entry and stamps its split tag.
LogitMatrix load_split(const std::filesystem::path& manifest_path,
                       const DatasetManifest& manifest, SplitTag split);

}  // namespace rankood
