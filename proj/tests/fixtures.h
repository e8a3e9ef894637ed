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

// Model descriptors and pipeline helpers shared by the tests.

#ifndef OMPQ_TESTS_FIXTURES_H_
#define OMPQ_TESTS_FIXTURES_H_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ompq/orm.h"
#include "ompq/toynet.h"
#include "ompq/types.h"
#include "oracles.h"

namespace ompq::fixture {

// ResNet-18 for 224x224 ImageNet: conv and fc weights (no biases or batch
// norm), MACs at each layer's output resolution. Downsample 1x1 convolutions
// share the block of the stride-2 convolution they parallel.
inline ModelDescriptor ResNet18() {
  ModelDescriptor m;
  auto add = [&](const std::string& name, std::uint64_t cout,
                 std::uint64_t cin, std::uint64_t k, std::uint64_t hw,
                 int block, int stage) {
    LayerDescriptor l;
    l.name = name;
    l.param_count = cout * cin * k * k;
    l.mac_count = l.param_count * hw * hw;
    l.block_id = block;
    l.stage_id = stage;
    m.layers.push_back(l);
  };
  add("conv1", 64, 3, 7, 112, 0, 0);
  int block = 1;
  const std::uint64_t widths[] = {64, 128, 256, 512};
  const std::uint64_t sizes[] = {56, 28, 14, 7};
  std::uint64_t in = 64;
  for (int s = 0; s < 4; ++s) {
    const std::uint64_t w = widths[s];
    const std::uint64_t hw = sizes[s];
    const std::string p = "layer" + std::to_string(s + 1);
    add(p + ".0.conv1", w, in, 3, hw, block, s + 1);
    add(p + ".0.conv2", w, w, 3, hw, block, s + 1);
    if (in != w) add(p + ".0.downsample", w, in, 1, hw, block, s + 1);
    ++block;
    add(p + ".1.conv1", w, w, 3, hw, block, s + 1);
    add(p + ".1.conv2", w, w, 3, hw, block, s + 1);
    ++block;
    in = w;
  }
  add("fc", 1000, 512, 1, 1, block, 5);
  m.layers.front().fixed_weight_bit = 8;
  m.layers.back().fixed_weight_bit = 8;
  return m;
}

// An L-layer descriptor with seeded parameter and MAC counts, no pins.
inline ModelDescriptor Synthetic(std::size_t layers, std::uint64_t seed) {
  oracle::Stream s(seed);
  ModelDescriptor m;
  for (std::size_t i = 0; i < layers; ++i) {
    LayerDescriptor l;
    l.name = "layer" + std::to_string(i + 1);
    l.param_count = 1000 + static_cast<std::uint64_t>(s.unit() * 400000);
    l.mac_count = l.param_count * (1 + static_cast<std::uint64_t>(s.unit() * 200));
    l.block_id = static_cast<int>(i / 3);
    l.stage_id = static_cast<int>(i / 12);
    m.layers.push_back(l);
  }
  return m;
}

// A seeded symmetric ORM-like matrix with unit diagonal whose entries decay
// with layer distance, as adjacent layers are the most dependent.
inline OrmMatrix RandomOrm(std::size_t order, std::uint64_t seed,
                           const ModelDescriptor& model) {
  oracle::Stream s(seed);
  std::vector<double> v(order * order, 1.0);
  for (std::size_t i = 0; i < order; ++i) {
    for (std::size_t j = i + 1; j < order; ++j) {
      v[i * order + j] = v[j * order + i] =
          s.unit() * std::exp(-static_cast<double>(j - i) / 3.0);
    }
  }
  std::vector<std::string> names;
  for (const LayerDescriptor& l : model.layers) names.push_back(l.name);
  return OrmMatrix::from_raw(order, std::move(v), std::move(names));
}

struct ToyCase {
  ModelDescriptor model;
  OrmMatrix k;
};

// toynet(seed) -> features -> ORM, with widths drawn from the seed.
inline ToyCase ToyPipeline(std::uint64_t seed, std::size_t layers,
                           std::size_t samples = 48) {
  oracle::Stream s(seed * 7919 + 1);
  ToyNetSpec spec;
  spec.seed = seed;
  spec.layer_dims.push_back(8 + static_cast<std::size_t>(s.unit() * 16));
  for (std::size_t l = 0; l < layers; ++l) {
    spec.layer_dims.push_back(8 + static_cast<std::size_t>(s.unit() * 40));
  }
  const ToyNet net = ToyNet::build(spec);
  const auto features = forward_collect(
      net, sample_inputs(input_seed_for(seed), samples, spec.layer_dims[0]));
  return {describe(net), orm_matrix(features, Strategy::kAuto)};
}

}  // namespace ompq::fixture

#endif  // OMPQ_TESTS_FIXTURES_H_
