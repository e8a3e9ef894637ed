// Copyright 2026 The OMPQ Authors
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

// File formats.
//
// Activation dump (binary, all integers little-endian):
//
//   magic        8 bytes  "OMPQACTV"
//   version      u32      1
//   layer_count  u32
//   per layer:
//     name_len   u32
//     name       name_len bytes, UTF-8
//     n_samples  u64
//     n_features u64
//     dtype      u8       1 = IEEE-754 float32, little-endian
//     payload    n_samples * n_features values, row-major (one row per
//                sample, each sample's output flattened C, H, W)
//
// The file ends exactly after the last payload. Layer names are unique.
//
// Model descriptor (JSON):
//
//   { "bit_min": 4, "bit_max": 8,
//     "layers": [ { "name": "conv1", "param_count": 9408,
//                   "mac_count": 118013952, "block_id": 0, "stage_id": 0,
//                   "fixed_weight_bit": 8, "activation_bit": 8 }, ... ] }
//
// bit_min/bit_max default to 4/8, block_id/stage_id to 0, activation_bit to
// 8; fixed_weight_bit may be omitted or null.
//
// ORM matrix (CSV): a header row of layer names, then L rows of L values
// printed with 17 significant digits.
//
// Allocation report (JSON): method, objective, model_size_mb, bops_g and a
// per-layer array with name, weight_bit, activation_bit, relaxed_bit,
// param_count, size_mb and size_share.

#ifndef OMPQ_MODEL_IO_H_
#define OMPQ_MODEL_IO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ompq/types.h"

namespace ompq {

inline constexpr char kDumpMagic[8] = {'O', 'M', 'P', 'Q', 'A', 'C', 'T', 'V'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::uint8_t kDumpDtypeFloat32 = 1;

// Values are narrowed to float32; a value that overflows float32 raises
// kNonFiniteValue. Output is a deterministic function of the input.
void write_dump(std::span<const FeatureMatrix> features, std::ostream& out);
void write_dump(std::span<const FeatureMatrix> features,
                const std::filesystem::path& path);

// Reads at most `size` bytes from `in`, which must be exactly one dump.
std::vector<FeatureMatrix> read_dump(std::istream& in, std::uint64_t size);
std::vector<FeatureMatrix> read_dump(const std::filesystem::path& path);

ModelDescriptor parse_descriptor(std::string_view json_text);
ModelDescriptor read_descriptor(const std::filesystem::path& path);
std::string descriptor_to_json(const ModelDescriptor& model);
void write_descriptor(const ModelDescriptor& model,
                      const std::filesystem::path& path);

std::string orm_to_csv(const OrmMatrix& k);
OrmMatrix parse_orm_csv(std::string_view text);
void write_orm_csv(const OrmMatrix& k, const std::filesystem::path& path);
OrmMatrix read_orm_csv(const std::filesystem::path& path);

struct ReportLayer {
  std::string name;
  int weight_bit = 0;
  int activation_bit = 0;
  double relaxed_bit = 0.0;
  std::uint64_t param_count = 0;
  double size_mb = 0.0;
  double size_share = 0.0;
};

struct AllocationReport {
  std::string method;
  double objective = 0.0;
  double model_size_mb = 0.0;
  double bops_g = 0.0;
  std::vector<ReportLayer> layers;
};

std::string report_to_json(const AllocationResult& result,
                           const ModelDescriptor& model);
void write_report(const AllocationResult& result, const ModelDescriptor& model,
                  const std::filesystem::path& path);
AllocationReport parse_report(std::string_view json_text);
AllocationReport read_report(const std::filesystem::path& path);

// SVG with the ORM heatmap (when `k` is non-null) beside the per-layer bit
// profile.
std::string render_svg(const OrmMatrix* k, const AllocationResult& result,
                       const ModelDescriptor& model);
void write_svg(const OrmMatrix* k, const AllocationResult& result,
               const ModelDescriptor& model,
               const std::filesystem::path& path);

// Whole-file helpers; failures raise kIo naming the path.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ompq

#endif  // OMPQ_MODEL_IO_H_
