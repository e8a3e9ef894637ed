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

// Pinned pseudorandom generators. Dumps produced from a seed must be
// reproducible from any language, so the algorithms here are fixed:
//
//   splitmix64:  s += 0x9E3779B97F4A7C15
//                z  = s
//                z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                return z ^ (z >> 31)
//
//   xorshift64*: state seeded with one splitmix64 draw from the user seed
//                (a zero draw is replaced by 0x9E3779B97F4A7C15), then
//                x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27
//                return x * 0x2545F4914F6CDD1D
//
//   uniform:     (next() >> 11) * 2^-53, in [0, 1)
//   normal:      Box-Muller on two uniforms u1, u2:
//                r = sqrt(-2 ln(1 - u1)), emit r cos(2 pi u2) then
//                r sin(2 pi u2); pairs are consumed in that order.

#ifndef OMPQ_RANDOM_H_
#define OMPQ_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ompq {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed) {
    SplitMix64 mix(seed);
    state_ = mix.next();
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ompq

#endif  // OMPQ_RANDOM_H_
