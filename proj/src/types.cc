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

#include "ompq/types.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "ompq/errors.h"

namespace ompq {

FeatureMatrix::FeatureMatrix(std::string layer_name, std::size_t n_samples,
                             std::size_t n_features, std::vector<double> data)
    : layer_name_(std::move(layer_name)),
      n_samples_(n_samples),
      n_features_(n_features),
      data_(std::move(data)) {
  if (n_samples_ == 0 || n_features_ == 0) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "feature matrix '" + layer_name_ +
                        "' must have at least one sample and one feature");
  }
  if (n_features_ > data_.size() / n_samples_ ||
      data_.size() != n_samples_ * n_features_) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "feature matrix '" + layer_name_ + "' holds " +
                        std::to_string(data_.size()) + " values, expected " +
                        std::to_string(n_samples_) + "x" +
                        std::to_string(n_features_));
  }
  bool any_nonzero = false;
  for (std::size_t k = 0; k < data_.size(); ++k) {
    if (!std::isfinite(data_[k])) {
      throw OmpqError(ErrorCode::kNonFiniteValue,
                      "feature matrix '" + layer_name_ +
                          "' has a non-finite value at flat index " +
                          std::to_string(k));
    }
    any_nonzero = any_nonzero || data_[k] != 0.0;
  }
  if (!any_nonzero) {
    throw OmpqError(ErrorCode::kZeroFeature,
                    "feature matrix '" + layer_name_ + "' is all zero");
  }
}

FeatureMatrix FeatureMatrix::renamed(std::string layer_name) const {
  return FeatureMatrix(std::move(layer_name), n_samples_, n_features_, data_);
}

FeatureMatrix FeatureMatrix::scaled(double factor) const {
  if (!std::isfinite(factor) || factor == 0.0) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "scale factor must be finite and nonzero");
  }
  std::vector<double> out(data_);
  for (double& v : out) v *= factor;
  return FeatureMatrix(layer_name_, n_samples_, n_features_, std::move(out));
}

OrmMatrix OrmMatrix::from_raw(std::size_t order, std::vector<double> values,
                              std::vector<std::string> layer_names) {
  auto fail = [](const std::string& what) -> OmpqError {
    return OmpqError(ErrorCode::kInvalidMatrix, "ORM matrix: " + what);
  };
  if (order == 0) throw fail("order must be positive");
  if (values.size() != order * order) {
    throw fail("expected " + std::to_string(order * order) + " values, got " +
               std::to_string(values.size()));
  }
  if (!layer_names.empty() && layer_names.size() != order) {
    throw fail("expected " + std::to_string(order) + " layer names, got " +
               std::to_string(layer_names.size()));
  }
  for (std::size_t i = 0; i < order; ++i) {
    for (std::size_t j = 0; j < order; ++j) {
      const double v = values[i * order + j];
      const std::string where =
          "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (!std::isfinite(v)) throw fail("non-finite entry at " + where);
      if (v < -kRangeTol || v > 1.0 + kRangeTol) {
        throw fail("entry " + where + " = " + std::to_string(v) +
                   " outside [0, 1]");
      }
      if (std::abs(v - values[j * order + i]) > kSymmetryTol) {
        throw fail("not symmetric at " + where);
      }
    }
    if (std::abs(values[i * order + i] - 1.0) > kDiagonalTol) {
      throw fail("diagonal entry " + std::to_string(i) + " is not 1");
    }
  }
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return OrmMatrix(order, std::move(values), std::move(layer_names));
}

std::string OrmMatrix::layer_name(std::size_t i) const {
  if (!layer_names_.empty()) return layer_names_[i];
  return "layer" + std::to_string(i + 1);
}

std::string_view importance_function_name(ImportanceFunction f) {
  switch (f) {
    case ImportanceFunction::kExpNeg: return "exp-neg";
    case ImportanceFunction::kNegLog: return "neg-log";
    case ImportanceFunction::kNeg: return "neg";
    case ImportanceFunction::kNegCube: return "neg-cube";
    case ImportanceFunction::kNegExp: return "neg-exp";
  }
  return "unknown";
}

std::optional<ImportanceFunction> parse_importance_function(
    std::string_view text) {
  if (text == "exp" || text == "exp-neg") return ImportanceFunction::kExpNeg;
  if (text == "neglog" || text == "neg-log") return ImportanceFunction::kNegLog;
  if (text == "neg") return ImportanceFunction::kNeg;
  if (text == "negcube" || text == "neg-cube") {
    return ImportanceFunction::kNegCube;
  }
  if (text == "negexp" || text == "neg-exp") return ImportanceFunction::kNegExp;
  return std::nullopt;
}

void ModelDescriptor::validate() const {
  auto fail = [](const std::string& what) -> OmpqError {
    return OmpqError(ErrorCode::kInvalidArgument, "model descriptor: " + what);
  };
  if (layers.empty()) throw fail("layers: at least one layer is required");
  if (bit_min < 1 || bit_max > 32 || bit_min > bit_max) {
    throw fail("bit range " + std::to_string(bit_min) + ":" +
               std::to_string(bit_max) + " must satisfy 1 <= min <= max <= 32");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerDescriptor& l = layers[i];
    const std::string at = "layers[" + std::to_string(i) + "]";
    if (l.name.empty()) throw fail(at + ".name: must be nonempty");
    if (!seen.insert(l.name).second) {
      throw fail(at + ".name: duplicate layer name '" + l.name + "'");
    }
    if (l.param_count == 0 && l.mac_count == 0) {
      throw fail(at + ": param_count + mac_count must be positive");
    }
    if (l.fixed_weight_bit && (*l.fixed_weight_bit < 1 ||
                               *l.fixed_weight_bit > 32)) {
      throw fail(at + ".fixed_weight_bit: must lie in [1, 32]");
    }
    if (l.activation_bit < 1 || l.activation_bit > 32) {
      throw fail(at + ".activation_bit: must lie in [1, 32]");
    }
  }
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kContinuous: return "continuous";
    case Method::kRound: return "round";
    case Method::kDfs: return "dfs";
  }
  return "unknown";
}

std::vector<FeatureMatrix> validate_feature_set(
    std::span<const FeatureMatrix> features, const ModelDescriptor& model) {
  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (!by_name.emplace(features[k].layer_name(), k).second) {
      throw OmpqError(ErrorCode::kDuplicateName,
                      "duplicate feature dump for layer '" +
                          features[k].layer_name() + "'");
    }
  }
  std::vector<FeatureMatrix> out;
  out.reserve(model.layers.size());
  for (const LayerDescriptor& layer : model.layers) {
    auto it = by_name.find(layer.name);
    if (it == by_name.end()) {
      throw OmpqError(ErrorCode::kMissingLayer,
                      "no feature dump for layer '" + layer.name + "'");
    }
    const FeatureMatrix& f = features[it->second];
    if (!out.empty() && f.n_samples() != out.front().n_samples()) {
      throw OmpqError(ErrorCode::kSampleMismatch,
                      "layer '" + f.layer_name() + "' has " +
                          std::to_string(f.n_samples()) + " samples, layer '" +
                          out.front().layer_name() + "' has " +
                          std::to_string(out.front().n_samples()));
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace ompq
