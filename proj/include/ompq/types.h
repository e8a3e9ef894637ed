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

// Domain types shared by the ORM, allocator and I/O modules. All of them
// validate on construction and are immutable afterwards.

#ifndef OMPQ_TYPES_H_
#define OMPQ_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ompq {

// N x p matrix of sampled layer outputs, row-major, one row per sample.
// Values are held in double precision; the on-disk dump stores float32.
class FeatureMatrix {
 public:
  // Throws kInvalidArgument on a zero dimension or size mismatch,
  // kNonFiniteValue on NaN/Inf and kZeroFeature if every entry is zero.
  FeatureMatrix(std::string layer_name, std::size_t n_samples,
                std::size_t n_features, std::vector<double> data);

  const std::string& layer_name() const { return layer_name_; }
  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_features() const { return n_features_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * n_features_,
                                                  n_features_);
  }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * n_features_ + c];
  }

  // Same values, different name.
  FeatureMatrix renamed(std::string layer_name) const;
  // Every entry multiplied by `factor` (must be finite and nonzero).
  FeatureMatrix scaled(double factor) const;

 private:
  std::string layer_name_;
  std::size_t n_samples_;
  std::size_t n_features_;
  std::vector<double> data_;
};

// L x L symmetric matrix of pairwise ORM values with unit diagonal.
class OrmMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-9;
  static constexpr double kDiagonalTol = 1e-6;
  static constexpr double kRangeTol = 1e-9;

  // Checks the invariants on a raw row-major matrix, then clamps entries to
  // [0, 1]. `layer_names` is either empty or of length `order`.
  // Throws kInvalidMatrix on any violation.
  static OrmMatrix from_raw(std::size_t order, std::vector<double> values,
                            std::vector<std::string> layer_names = {});

  std::size_t order() const { return order_; }
  double at(std::size_t i, std::size_t j) const {
    return values_[i * order_ + j];
  }
  std::span<const double> values() const { return values_; }
  // Empty when the matrix was built without names.
  const std::vector<std::string>& layer_names() const { return layer_names_; }
  // Name of layer i, falling back to "layer<i+1>".
  std::string layer_name(std::size_t i) const;

 private:
  OrmMatrix(std::size_t order, std::vector<double> values,
            std::vector<std::string> layer_names)
      : order_(order),
        values_(std::move(values)),
        layer_names_(std::move(layer_names)) {}

  std::size_t order_;
  std::vector<double> values_;
  std::vector<std::string> layer_names_;
};

// Decreasing functions g mapping beta * gamma to an importance factor.
enum class ImportanceFunction {
  kExpNeg,   // e^{-x}
  kNegLog,   // -log(x)
  kNeg,      // -x
  kNegCube,  // -x^3
  kNegExp,   // -e^{x}
};

std::string_view importance_function_name(ImportanceFunction f);
// Accepts both the long names ("exp-neg") and the CLI tokens ("exp").
std::optional<ImportanceFunction> parse_importance_function(
    std::string_view text);

struct ImportanceVector {
  std::vector<double> gamma;
  std::vector<double> theta;
  double beta = 1.0;
  ImportanceFunction function = ImportanceFunction::kExpNeg;
};

struct LayerDescriptor {
  std::string name;
  std::uint64_t param_count = 0;
  std::uint64_t mac_count = 0;
  int block_id = 0;
  int stage_id = 0;
  std::optional<int> fixed_weight_bit;
  int activation_bit = 8;
};

struct ModelDescriptor {
  std::vector<LayerDescriptor> layers;
  int bit_min = 4;
  int bit_max = 8;

  std::size_t size() const { return layers.size(); }
  // Throws kInvalidArgument describing the first offending field.
  void validate() const;
};

enum class Method { kContinuous, kRound, kDfs };

std::string_view method_name(Method m);

struct AllocationResult {
  // Per-layer integer weight bits, in model layer order.
  std::vector<int> bits;
  // Per-layer relaxation solution the integer bits were derived from.
  std::vector<double> relaxed_bits;
  double objective_value = 0.0;
  double model_size_mb = 0.0;
  double bops_g = 0.0;
  Method method = Method::kDfs;
};

// Reorders `features` to follow `model.layers` by name and checks that all
// matrices share one sample count. Dumps for layers the descriptor does not
// list are dropped.
std::vector<FeatureMatrix> validate_feature_set(
    std::span<const FeatureMatrix> features, const ModelDescriptor& model);

}  // namespace ompq

#endif  // OMPQ_TYPES_H_
