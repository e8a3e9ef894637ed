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

// Deterministic fully connected networks for exercising the pipeline
// without a deep learning framework.
//
// Weights of layer l (out x in, row-major) are standard normals drawn from
// one Xorshift64Star stream seeded with the net seed, layers in order,
// each scaled by 1/sqrt(in). There are no biases. Inputs for a run come
// from sample_inputs with their own seed.

#ifndef OMPQ_TOYNET_H_
#define OMPQ_TOYNET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ompq/types.h"

namespace ompq {

enum class Nonlinearity { kRelu, kIdentity };

struct ToyNetSpec {
  std::uint64_t seed = 0;
  // Input dimension followed by each layer's output dimension.
  std::vector<std::size_t> layer_dims;
  Nonlinearity nonlinearity = Nonlinearity::kRelu;
  // Consecutive layers sharing a block label; two blocks form a stage.
  std::size_t block_size = 2;

  std::size_t num_layers() const {
    return layer_dims.empty() ? 0 : layer_dims.size() - 1;
  }
  void validate() const;
};

// Dense row-major matrix used for weights and inputs.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
};

class ToyNet {
 public:
  // Weights drawn from the pinned generator.
  static ToyNet build(const ToyNetSpec& spec);
  // Explicit weights; weights[l] must be layer_dims[l+1] x layer_dims[l].
  static ToyNet from_weights(const ToyNetSpec& spec,
                            std::vector<DenseMatrix> weights);

  const ToyNetSpec& spec() const { return spec_; }
  const std::vector<DenseMatrix>& weights() const { return weights_; }

 private:
  ToyNet(ToyNetSpec spec, std::vector<DenseMatrix> weights)
      : spec_(std::move(spec)), weights_(std::move(weights)) {}

  ToyNetSpec spec_;
  std::vector<DenseMatrix> weights_;
};

// n x d standard normals from the pinned generator, row-major.
DenseMatrix sample_inputs(std::uint64_t seed, std::size_t n, std::size_t d);

// Outputs of every prefix f_i = g_i o ... o g_1, one FeatureMatrix per
// layer named "fc<i>" (1-based). Throws kDimMismatch if inputs.cols differs
// from the input dimension.
std::vector<FeatureMatrix> forward_collect(const ToyNet& net,
                                           const DenseMatrix& inputs);

// Descriptor for the net: param_count = mac_count = in * out,
// block_id = layer / block_size, stage_id = block_id / 2, no pins.
ModelDescriptor describe(const ToyNet& net, int bit_min = 4, int bit_max = 8,
                         int activation_bit = 8);

// Seed used for inputs when only a net seed is given.
std::uint64_t input_seed_for(std::uint64_t net_seed);

}  // namespace ompq

#endif  // OMPQ_TOYNET_H_
