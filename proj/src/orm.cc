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

#include "ompq/orm.h"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "ompq/errors.h"
#include "ompq/random.h"
#include "parallel.h"

namespace ompq {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

// Upper bound on the doubles held by one block of the cross product.
constexpr std::size_t kCrossBlockElements = std::size_t{1} << 22;

ConstRowMap view(const FeatureMatrix& f) {
  return ConstRowMap(f.data().data(), static_cast<Eigen::Index>(f.n_samples()),
                     static_cast<Eigen::Index>(f.n_features()));
}

// Fixed argument order for the norm form so that swapping the arguments
// replays the exact same arithmetic.
bool canonical_order(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.n_features() != b.n_features()) {
    return a.n_features() <= b.n_features();
  }
  if (a.data().data() == b.data().data()) return true;
  return !std::lexicographical_compare(b.data().begin(), b.data().end(),
                                       a.data().begin(), a.data().end());
}

void check_samples(const FeatureMatrix& fi, const FeatureMatrix& fj) {
  if (fi.n_samples() != fj.n_samples()) {
    throw OmpqError(ErrorCode::kSampleMismatch,
                    "layers '" + fi.layer_name() + "' and '" +
                        fj.layer_name() + "' have " +
                        std::to_string(fi.n_samples()) + " and " +
                        std::to_string(fj.n_samples()) + " samples");
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

FeatureMatrix random_features(std::string name, std::size_t n, std::size_t p,
                              std::uint64_t seed) {
  Xorshift64Star rng(seed);
  std::vector<double> data(n * p);
  for (double& v : data) v = rng.normal();
  return FeatureMatrix(std::move(name), n, p, std::move(data));
}

}  // namespace

GramMatrix::GramMatrix(std::string layer_name, std::size_t order,
                       std::vector<double> values)
    : layer_name_(std::move(layer_name)),
      order_(order),
      values_(std::move(values)) {
  if (order_ == 0 || values_.size() != order_ * order_) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "Gram matrix '" + layer_name_ + "' has inconsistent shape");
  }
}

double GramMatrix::frobenius_norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kNormForm: return "norm-form";
    case Strategy::kGramForm: return "gram-form";
    case Strategy::kAuto: return "auto";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "auto") return Strategy::kAuto;
  if (text == "norm" || text == "norm-form") return Strategy::kNormForm;
  if (text == "gram" || text == "gram-form") return Strategy::kGramForm;
  return std::nullopt;
}

GramMatrix gram(const FeatureMatrix& f) {
  const auto n = static_cast<Eigen::Index>(f.n_samples());
  RowMatrix g(n, n);
  const ConstRowMap x = view(f);
  g.noalias() = x * x.transpose();
  // Mirror the lower triangle so the result is symmetric bit for bit.
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return GramMatrix(f.layer_name(), f.n_samples(),
                    std::vector<double>(g.data(), g.data() + g.size()));
}

double cross_norm_squared(const FeatureMatrix& fi, const FeatureMatrix& fj) {
  check_samples(fi, fj);
  const bool keep = canonical_order(fi, fj);
  const FeatureMatrix& a = keep ? fi : fj;
  const FeatureMatrix& b = keep ? fj : fi;
  const ConstRowMap ma = view(a);
  const ConstRowMap mb = view(b);
  const std::size_t pa = a.n_features();
  const std::size_t pb = b.n_features();
  const std::size_t width =
      std::clamp<std::size_t>(kCrossBlockElements / pb, 1, pa);

  double sum = 0.0;
  Eigen::MatrixXd block;
  for (std::size_t c = 0; c < pa; c += width) {
    const auto w = static_cast<Eigen::Index>(std::min(width, pa - c));
    block.noalias() =
        mb.transpose() * ma.middleCols(static_cast<Eigen::Index>(c), w);
    sum += block.squaredNorm();
  }
  return sum;
}

double self_norm(const FeatureMatrix& f) {
  return std::sqrt(cross_norm_squared(f, f));
}

double orm_from_parts(double cross_squared, double norm_i, double norm_j) {
  if (!(norm_i > 0.0) || !(norm_j > 0.0)) {
    throw OmpqError(ErrorCode::kZeroFeature,
                    "ORM denominator is zero (all-zero feature matrix)");
  }
  return std::clamp(cross_squared / (norm_i * norm_j), 0.0, 1.0);
}

double orm_pair_norm(const FeatureMatrix& fi, const FeatureMatrix& fj) {
  const double cross = cross_norm_squared(fi, fj);
  return orm_from_parts(cross, self_norm(fi), self_norm(fj));
}

double orm_pair_gram(const GramMatrix& gi, const GramMatrix& gj, double norm_i,
                     double norm_j) {
  if (gi.order() != gj.order()) {
    throw OmpqError(ErrorCode::kOrderMismatch,
                    "Gram matrices '" + gi.layer_name() + "' and '" +
                        gj.layer_name() + "' have orders " +
                        std::to_string(gi.order()) + " and " +
                        std::to_string(gj.order()));
  }
  const auto size = static_cast<Eigen::Index>(gi.values().size());
  const Eigen::Map<const Eigen::ArrayXd> a(gi.values().data(), size);
  const Eigen::Map<const Eigen::ArrayXd> b(gj.values().data(), size);
  return orm_from_parts((a * b).sum(), norm_i, norm_j);
}

Strategy select_strategy(std::size_t n, std::size_t p_i, std::size_t p_j,
                         Strategy requested) {
  if (requested != Strategy::kAuto) return requested;
  // Compared in floating point: N * p_i * p_j overflows 64 bits for large
  // convolution outputs.
  const double norm_cost = static_cast<double>(n) * static_cast<double>(p_i) *
                           static_cast<double>(p_j);
  const double gram_cost = static_cast<double>(n) * static_cast<double>(n) *
                           static_cast<double>(p_i + p_j + 1);
  return norm_cost < gram_cost ? Strategy::kNormForm : Strategy::kGramForm;
}

OrmMatrix orm_matrix(std::span<const FeatureMatrix> features,
                     Strategy strategy, unsigned workers, OrmTiming* timing) {
  const std::size_t layers = features.size();
  if (layers == 0) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "ORM matrix needs at least one layer");
  }
  for (std::size_t i = 1; i < layers; ++i) {
    check_samples(features[0], features[i]);
  }
  const std::size_t n = features[0].n_samples();

  struct Pair {
    std::size_t i;
    std::size_t j;
    Strategy strategy;
  };
  std::vector<Pair> pairs;
  pairs.reserve(layers * (layers - 1) / 2);
  std::vector<char> need_gram(layers, 0);
  std::vector<char> need_norm(layers, 0);
  for (std::size_t i = 0; i < layers; ++i) {
    for (std::size_t j = i + 1; j < layers; ++j) {
      const Strategy s = select_strategy(n, features[i].n_features(),
                                         features[j].n_features(), strategy);
      pairs.push_back({i, j, s});
      auto& need = s == Strategy::kGramForm ? need_gram : need_norm;
      need[i] = need[j] = 1;
    }
  }

  auto start = std::chrono::steady_clock::now();
  std::vector<std::optional<GramMatrix>> grams(layers);
  std::vector<double> gram_norms(layers, 0.0);
  std::vector<double> self_norms(layers, 0.0);
  internal::parallel_for(layers, workers, [&](std::size_t i) {
    try {
      if (need_gram[i]) {
        grams[i] = gram(features[i]);
        gram_norms[i] = grams[i]->frobenius_norm();
      }
      if (need_norm[i]) self_norms[i] = self_norm(features[i]);
    } catch (const OmpqError&) {
      rethrow_with_context("layer " + std::to_string(i) + " '" +
                           features[i].layer_name() + "'");
    }
  });
  if (timing != nullptr) timing->gram_phase_seconds = seconds_since(start);

  start = std::chrono::steady_clock::now();
  std::vector<double> values(layers * layers, 0.0);
  internal::parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const Pair& pr = pairs[k];
    try {
      double v;
      if (pr.strategy == Strategy::kGramForm) {
        v = orm_pair_gram(*grams[pr.i], *grams[pr.j], gram_norms[pr.i],
                          gram_norms[pr.j]);
      } else {
        v = orm_from_parts(cross_norm_squared(features[pr.i], features[pr.j]),
                           self_norms[pr.i], self_norms[pr.j]);
      }
      values[pr.i * layers + pr.j] = v;
      values[pr.j * layers + pr.i] = v;
    } catch (const OmpqError&) {
      rethrow_with_context("pair (" + std::to_string(pr.i) + ", " +
                           std::to_string(pr.j) + ") '" +
                           features[pr.i].layer_name() + "'/'" +
                           features[pr.j].layer_name() + "'");
    }
  });
  for (std::size_t i = 0; i < layers; ++i) values[i * layers + i] = 1.0;
  if (timing != nullptr) timing->pair_phase_seconds = seconds_since(start);

  std::vector<std::string> names;
  names.reserve(layers);
  for (const FeatureMatrix& f : features) names.push_back(f.layer_name());
  return OrmMatrix::from_raw(layers, std::move(values), std::move(names));
}

std::vector<double> gamma(const OrmMatrix& k) {
  const std::size_t order = k.order();
  std::vector<double> out(order, 0.0);
  for (std::size_t i = 0; i < order; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < order; ++j) {
      if (j != i) sum += k.at(i, j);
    }
    out[i] = sum;
  }
  return out;
}

ImportanceVector importance(std::span<const double> gamma, double beta,
                            ImportanceFunction function) {
  if (!std::isfinite(beta) || beta <= 0.0) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "beta must be a positive finite number");
  }
  ImportanceVector out;
  out.beta = beta;
  out.function = function;
  out.gamma.assign(gamma.begin(), gamma.end());
  out.theta.reserve(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const double g = gamma[i];
    if (!std::isfinite(g) || g < 0.0) {
      throw OmpqError(ErrorCode::kInvalidArgument,
                      "gamma[" + std::to_string(i) + "] must be nonnegative");
    }
    const double x = beta * g;
    double theta = 0.0;
    switch (function) {
      case ImportanceFunction::kExpNeg: theta = std::exp(-x); break;
      case ImportanceFunction::kNegLog:
        theta = -std::log(beta * std::max(g, kNegLogFloor));
        break;
      case ImportanceFunction::kNeg: theta = -x; break;
      case ImportanceFunction::kNegCube: theta = -x * x * x; break;
      case ImportanceFunction::kNegExp: theta = -std::exp(x); break;
    }
    out.theta.push_back(theta);
  }
  return out;
}

double StrategyTiming::ratio() const {
  const double fast = std::min(norm_seconds, gram_seconds);
  const double slow = std::max(norm_seconds, gram_seconds);
  if (fast <= 0.0) return std::numeric_limits<double>::infinity();
  return slow / fast;
}

StrategyTiming bench_strategies(std::size_t n, std::size_t p, int repeats,
                                std::uint64_t seed) {
  if (n == 0 || p == 0 || repeats < 1) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "bench needs n, p and repeats >= 1");
  }
  const FeatureMatrix y = random_features("Y", n, p, seed);
  const FeatureMatrix z = random_features("Z", n, p, seed + 1);

  StrategyTiming t;
  t.n = n;
  t.p = p;
  t.repeats = repeats;
  t.norm_seconds = std::numeric_limits<double>::infinity();
  t.gram_seconds = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    auto start = std::chrono::steady_clock::now();
    t.orm_norm = orm_pair_norm(y, z);
    t.norm_seconds = std::min(t.norm_seconds, seconds_since(start));

    start = std::chrono::steady_clock::now();
    {
      const GramMatrix gy = gram(y);
      const GramMatrix gz = gram(z);
      t.orm_gram =
          orm_pair_gram(gy, gz, gy.frobenius_norm(), gz.frobenius_norm());
    }
    t.gram_seconds = std::min(t.gram_seconds, seconds_since(start));
  }
  return t;
}

}  // namespace ompq
