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

// Orthogonality metric between layer feature matrices.
//
//   ORM(Fi, Fj) = ||Fj^T Fi||_F^2 / (||Fi^T Fi||_F * ||Fj^T Fj||_F)
//
// It can be evaluated in "norm form" directly from the p x p cross products,
// costing O(N p_i p_j), or in "gram form" through the identity
//
//   ||Z^T Y||_F^2 = <vec(Y Y^T), vec(Z Z^T)>
//
// which works on N x N Gram matrices and costs O(N^2 (p_i + p_j + 1)).
// Features are not mean-centered.

#ifndef OMPQ_ORM_H_
#define OMPQ_ORM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "ompq/types.h"

namespace ompq {

// F * F^T of one feature matrix, N x N, row-major.
class GramMatrix {
 public:
  GramMatrix(std::string layer_name, std::size_t order,
             std::vector<double> values);

  const std::string& layer_name() const { return layer_name_; }
  std::size_t order() const { return order_; }
  std::span<const double> values() const { return values_; }
  double at(std::size_t i, std::size_t j) const {
    return values_[i * order_ + j];
  }
  // ||G||_F, which equals ||F^T F||_F for the source matrix.
  double frobenius_norm() const;

 private:
  std::string layer_name_;
  std::size_t order_;
  std::vector<double> values_;
};

enum class Strategy { kNormForm, kGramForm, kAuto };

std::string_view strategy_name(Strategy s);
// Accepts "auto", "norm", "gram", "norm-form", "gram-form".
std::optional<Strategy> parse_strategy(std::string_view text);

GramMatrix gram(const FeatureMatrix& f);

// ||Fj^T Fi||_F^2, accumulated in double over column blocks so the p_j x p_i
// product is never materialized in full. Symmetric in its arguments bit for
// bit.
double cross_norm_squared(const FeatureMatrix& fi, const FeatureMatrix& fj);

// ||F^T F||_F by the norm form.
double self_norm(const FeatureMatrix& f);

// Combines a squared cross norm with the two self norms and clamps to [0, 1].
double orm_from_parts(double cross_squared, double norm_i, double norm_j);

// Throws kSampleMismatch if the sample counts differ.
double orm_pair_norm(const FeatureMatrix& fi, const FeatureMatrix& fj);

// norm_i and norm_j are ||Gi||_F and ||Gj||_F. Throws kOrderMismatch on
// differing orders and kZeroFeature on a zero norm.
double orm_pair_gram(const GramMatrix& gi, const GramMatrix& gj, double norm_i,
                     double norm_j);

// Resolves kAuto with the cost model N p_i p_j vs N^2 (p_i + p_j + 1);
// explicit requests are echoed back.
Strategy select_strategy(std::size_t n, std::size_t p_i, std::size_t p_j,
                         Strategy requested);

// Wall-clock seconds spent in the two phases of orm_matrix.
struct OrmTiming {
  double gram_phase_seconds = 0.0;
  double pair_phase_seconds = 0.0;
};

// Full L x L ORM matrix. Per-layer Gram matrices and self norms are built
// once in a first phase, then the i < j pairs are evaluated and mirrored.
// The result does not depend on `workers`.
OrmMatrix orm_matrix(std::span<const FeatureMatrix> features,
                     Strategy strategy, unsigned workers = 1,
                     OrmTiming* timing = nullptr);

// Off-diagonal row sums of K.
std::vector<double> gamma(const OrmMatrix& k);

// theta_i = g(beta * gamma_i). For neg-log gamma is floored at
// kNegLogFloor before the logarithm.
inline constexpr double kNegLogFloor = 1e-12;
ImportanceVector importance(std::span<const double> gamma, double beta,
                            ImportanceFunction function);

// Timing of one Y, Z pair under both strategies (supplementary benchmark
// layout: N x p standard-normal matrices of equal size).
struct StrategyTiming {
  std::size_t n = 0;
  std::size_t p = 0;
  int repeats = 0;
  double norm_seconds = 0.0;  // best of `repeats`
  double gram_seconds = 0.0;  // best of `repeats`, Gram build included
  double orm_norm = 0.0;
  double orm_gram = 0.0;

  Strategy faster() const {
    return norm_seconds <= gram_seconds ? Strategy::kNormForm
                                        : Strategy::kGramForm;
  }
  // slower / faster, >= 1.
  double ratio() const;
};

StrategyTiming bench_strategies(std::size_t n, std::size_t p, int repeats,
                                std::uint64_t seed = 20220704);

}  // namespace ompq

#endif  // OMPQ_ORM_H_
