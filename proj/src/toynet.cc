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

#include "ompq/toynet.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ompq/errors.h"
#include "ompq/random.h"

namespace ompq {

void ToyNetSpec::validate() const {
  if (layer_dims.size() < 2) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "toy net needs an input dimension and at least one layer");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) {
      throw OmpqError(ErrorCode::kInvalidArgument,
                      "toy net dimensions must be positive");
    }
  }
  if (block_size == 0) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "toy net block size must be positive");
  }
}

ToyNet ToyNet::build(const ToyNetSpec& spec) {
  spec.validate();
  Xorshift64Star rng(spec.seed);
  std::vector<DenseMatrix> weights;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    DenseMatrix w;
    w.cols = spec.layer_dims[l];
    w.rows = spec.layer_dims[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.cols));
    w.values.resize(w.rows * w.cols);
    for (double& v : w.values) v = rng.normal() * scale;
    weights.push_back(std::move(w));
  }
  return ToyNet(spec, std::move(weights));
}

ToyNet ToyNet::from_weights(const ToyNetSpec& spec,
                            std::vector<DenseMatrix> weights) {
  spec.validate();
  if (weights.size() != spec.num_layers()) {
    throw OmpqError(ErrorCode::kDimMismatch,
                    "expected " + std::to_string(spec.num_layers()) +
                        " weight matrices, got " +
                        std::to_string(weights.size()));
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const DenseMatrix& w = weights[l];
    if (w.cols != spec.layer_dims[l] || w.rows != spec.layer_dims[l + 1] ||
        w.values.size() != w.rows * w.cols) {
      throw OmpqError(ErrorCode::kDimMismatch,
                      "weight " + std::to_string(l) + " has the wrong shape");
    }
  }
  return ToyNet(spec, std::move(weights));
}

DenseMatrix sample_inputs(std::uint64_t seed, std::size_t n, std::size_t d) {
  if (n == 0 || d == 0) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "sample_inputs needs n >= 1 and d >= 1");
  }
  Xorshift64Star rng(seed);
  DenseMatrix x{n, d, std::vector<double>(n * d)};
  for (double& v : x.values) v = rng.normal();
  return x;
}

std::vector<FeatureMatrix> forward_collect(const ToyNet& net,
                                           const DenseMatrix& inputs) {
  const ToyNetSpec& spec = net.spec();
  if (inputs.cols != spec.layer_dims[0] ||
      inputs.values.size() != inputs.rows * inputs.cols) {
    throw OmpqError(ErrorCode::kDimMismatch,
                    "inputs have " + std::to_string(inputs.cols) +
                        " columns, the net expects " +
                        std::to_string(spec.layer_dims[0]));
  }
  const std::size_t n = inputs.rows;
  std::vector<FeatureMatrix> out;
  std::vector<double> h = inputs.values;
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    const DenseMatrix& w = net.weights()[l];
    std::vector<double> next(n * w.rows, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const double* x = &h[s * w.cols];
      for (std::size_t o = 0; o < w.rows; ++o) {
        const double* row = &w.values[o * w.cols];
        double acc = 0.0;
        for (std::size_t k = 0; k < w.cols; ++k) acc += row[k] * x[k];
        if (spec.nonlinearity == Nonlinearity::kRelu) acc = std::max(acc, 0.0);
        next[s * w.rows + o] = acc;
      }
    }
    h = std::move(next);
    out.emplace_back("fc" + std::to_string(l + 1), n, w.rows, h);
  }
  return out;
}

ModelDescriptor describe(const ToyNet& net, int bit_min, int bit_max,
                         int activation_bit) {
  const ToyNetSpec& spec = net.spec();
  ModelDescriptor model;
  model.bit_min = bit_min;
  model.bit_max = bit_max;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    LayerDescriptor d;
    d.name = "fc" + std::to_string(l + 1);
    d.param_count = spec.layer_dims[l] * spec.layer_dims[l + 1];
    d.mac_count = d.param_count;
    d.block_id = static_cast<int>(l / spec.block_size);
    d.stage_id = d.block_id / 2;
    d.activation_bit = activation_bit;
    model.layers.push_back(std::move(d));
  }
  model.validate();
  return model;
}

std::uint64_t input_seed_for(std::uint64_t net_seed) {
  return net_seed ^ 0xA5A5A5A5A5A5A5A5ULL;
}

}  // namespace ompq
