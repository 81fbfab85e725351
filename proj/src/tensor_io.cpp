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

#include "rankood/tensor_io.hpp"

#include <zlib.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace rankood {
namespace {

constexpr char kMagic[4] = {'R', 'K', 'O', 'D'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return std::move(buf).str();
}

std::string write_file_bytes(const std::filesystem::path& path,
                             const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  return crc32_hex(bytes.data(), bytes.size());
}

std::string encode_binary(const LogitMatrix& m) {
  std::string out;
  const uint64_t n = static_cast<uint64_t>(m.rows());
  const uint32_t c = static_cast<uint32_t>(m.cols());
  out.reserve(21 + n * c * 4 + (m.labels ? n * 4 : 0));
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, n);
  put_u32(out, c);
  out.push_back(m.labels ? char(1) : char(0));
  static_assert(sizeof(float) == 4);
  // Row-major storage makes the payload one contiguous block.
  out.append(reinterpret_cast<const char*>(m.data.data()), n * c * 4);
  if (m.labels) {
    for (uint64_t i = 0; i < n; ++i) {
      put_u32(out, static_cast<uint32_t>((*m.labels)(static_cast<Eigen::Index>(i))));
    }
  }
  return out;
}

LogitMatrix decode_binary(const std::string& bytes,
                          const std::filesystem::path& path) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 21) throw FormatError("truncated header in " + path.string());
  if (std::memcmp(p, kMagic, 4) != 0) {
    throw FormatError("bad magic in " + path.string());
  }
  const uint32_t version = get_u32(p + 4);
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version) +
                      " in " + path.string());
  }
  const uint64_t n = get_u64(p + 8);
  const uint32_t c = get_u32(p + 16);
  const uint8_t has_labels = p[20];
  if (has_labels > 1) throw FormatError("bad label flag in " + path.string());
  if (n > (1ULL << 32) || c > (1U << 24)) {
    throw FormatError("implausible tensor shape in " + path.string());
  }
  const uint64_t payload = n * c * 4;
  const uint64_t expected = 21 + payload + (has_labels ? n * 4 : 0);
  if (bytes.size() != expected) {
    throw FormatError("payload length mismatch in " + path.string() +
                      ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  LogitMatrix m;
  m.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  std::memcpy(m.data.data(), p + 21, payload);
  if (has_labels) {
    VectorI labels(static_cast<Eigen::Index>(n));
    for (uint64_t i = 0; i < n; ++i) {
      labels(static_cast<Eigen::Index>(i)) =
          static_cast<int>(get_u32(p + 21 + payload + i * 4));
    }
    m.labels = std::move(labels);
  }
  m.validate();
  return m;
}

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

std::string encode_csv(const LogitMatrix& m) {
  std::string out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (c > 0) out += ',';
    out += "logit_" + std::to_string(c);
  }
  if (m.labels) out += ",label";
  out += '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ',';
      append_g17(out, static_cast<double>(m.data(r, c)));
    }
    if (m.labels) out += ',' + std::to_string((*m.labels)(r));
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double_field(const std::string& field,
                          const std::filesystem::path& path, size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw FormatError("unparsable value '" + field + "' at line " +
                      std::to_string(line_no) + " of " + path.string());
  }
  return value;
}

LogitMatrix decode_csv(const std::string& text,
                       const std::filesystem::path& path) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("missing header row in " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const bool has_labels = !header.empty() && header.back() == "label";
  const size_t n_cols = header.size() - (has_labels ? 1 : 0);
  if (n_cols < 2) {
    throw FormatError("header in " + path.string() +
                      " declares fewer than two logit columns");
  }

  std::vector<float> values;
  std::vector<int> labels;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw FormatError("line " + std::to_string(line_no) + " of " +
                        path.string() + " has " + std::to_string(fields.size()) +
                        " fields, header declares " +
                        std::to_string(header.size()));
    }
    for (size_t c = 0; c < n_cols; ++c) {
      values.push_back(
          static_cast<float>(parse_double_field(fields[c], path, line_no)));
    }
    if (has_labels) {
      const double y = parse_double_field(fields.back(), path, line_no);
      if (!std::isfinite(y) || y != std::floor(y) || y < 0 || y > 1e9) {
        throw FormatError("bad label '" + fields.back() + "' at line " +
                          std::to_string(line_no) + " of " + path.string());
      }
      labels.push_back(static_cast<int>(y));
    }
  }
  if (values.empty()) throw FormatError("no data rows in " + path.string());

  LogitMatrix m;
  const Eigen::Index rows = static_cast<Eigen::Index>(values.size() / n_cols);
  m.data.resize(rows, static_cast<Eigen::Index>(n_cols));
  std::memcpy(m.data.data(), values.data(), values.size() * sizeof(float));
  if (has_labels) {
    VectorI lv(rows);
    for (Eigen::Index i = 0; i < rows; ++i) lv(i) = labels[static_cast<size_t>(i)];
    m.labels = std::move(lv);
  }
  m.validate();
  return m;
}

}  // namespace

TensorFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? TensorFormat::csv : TensorFormat::binary;
}

std::string write_logits(const LogitMatrix& matrix,
                         const std::filesystem::path& path,
                         TensorFormat format) {
  matrix.validate();
  const std::string bytes =
      format == TensorFormat::binary ? encode_binary(matrix) : encode_csv(matrix);
  return write_file_bytes(path, bytes);
}

LogitMatrix read_logits(const std::filesystem::path& path,
                        TensorFormat format) {
  const std::string bytes = read_file_bytes(path);
  return format == TensorFormat::binary ? decode_binary(bytes, path)
                                        : decode_csv(bytes, path);
}

std::string crc32_hex(const void* data, size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, static_cast<const Bytef*>(data),
                static_cast<uInt>(size));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

std::string file_crc32_hex(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  return crc32_hex(bytes.data(), bytes.size());
}

const ManifestEntry* DatasetManifest::find(SplitTag split) const {
  for (const auto& e : entries) {
    if (e.split == split) return &e;
  }
  return nullptr;
}

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["seed"] = manifest.seed;
  doc["notes"] = manifest.notes;
  doc["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    doc["entries"].push_back({{"path", e.path},
                              {"split", to_string(e.split)},
                              {"n_samples", e.n_samples},
                              {"n_classes", e.n_classes},
                              {"checksum", e.checksum}});
  }
  write_file_bytes(path, doc.dump(2) + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& path,
                              bool verify_checksums) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest manifest;
  try {
    manifest.seed = doc.at("seed").get<uint64_t>();
    manifest.notes = doc.value("notes", std::string{});
    for (const auto& item : doc.at("entries")) {
      ManifestEntry e;
      e.path = item.at("path").get<std::string>();
      e.split = split_tag_from_string(item.at("split").get<std::string>());
      e.n_samples = item.at("n_samples").get<int64_t>();
      e.n_classes = item.at("n_classes").get<int>();
      e.checksum = item.at("checksum").get<std::string>();
      manifest.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + path.string() + ": " + e.what());
  }
  if (manifest.entries.empty()) {
    throw ValidationError("manifest " + path.string() + " lists no tensors");
  }
  const int c0 = manifest.entries.front().n_classes;
  for (const auto& e : manifest.entries) {
    if (e.n_classes != c0) {
      throw ValidationError("manifest " + path.string() +
                            " mixes class counts " + std::to_string(c0) +
                            " and " + std::to_string(e.n_classes));
    }
  }
  if (verify_checksums) {
    const auto dir = path.parent_path();
    for (const auto& e : manifest.entries) {
      const auto file = dir / e.path;
      if (!std::filesystem::exists(file)) {
        throw ValidationError("manifest entry missing on disk: " + file.string());
      }
      const std::string actual = file_crc32_hex(file);
      if (actual != e.checksum) {
        throw ValidationError("checksum mismatch for " + file.string() +
                              ": manifest says " + e.checksum + ", file is " +
                              actual);
      }
    }
  }
  return manifest;
}

LogitMatrix load_split(const std::filesystem::path& manifest_path,
                       const DatasetManifest& manifest, SplitTag split) {
  const ManifestEntry* entry = manifest.find(split);
  if (entry == nullptr) {
    throw ValidationError("manifest " + manifest_path.string() +
                          " has no entry for split " + to_string(split));
  }
  const auto file = manifest_path.parent_path() / entry->path;
  LogitMatrix m = read_logits(file, format_for_path(file));
  if (m.rows() != entry->n_samples || m.cols() != entry->n_classes) {
    throw ValidationError("tensor " + file.string() +
                          " does not match its manifest entry shape");
  }
  m.split = split;
  return m;
}

}  // namespace rankood
