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

#include <cmath>
#include <limits>
#include <vector>

#include "gtest/gtest.h"
#include "ompq/errors.h"
#include "ompq/toynet.h"
#include "oracles.h"

namespace ompq {
namespace {

FeatureMatrix Col(std::vector<double> v) {
  const std::size_t n = v.size();
  return FeatureMatrix("c", n, 1, std::move(v));
}

TEST(GramTest, DirectProduct) {
  const GramMatrix g = gram(Col({1, 0}));
  EXPECT_EQ(std::vector<double>(g.values().begin(), g.values().end()),
            (std::vector<double>{1, 0, 0, 0}));
}

TEST(GramTest, Identity) {
  const GramMatrix g = gram(FeatureMatrix("i", 2, 2, {1, 0, 0, 1}));
  EXPECT_EQ(std::vector<double>(g.values().begin(), g.values().end()),
            (std::vector<double>{1, 0, 0, 1}));
}

TEST(GramTest, MatchesTripleLoop) {
  const FeatureMatrix f = oracle::random_features("r", 3, 2, 42);
  const GramMatrix g = gram(f);
  const std::vector<double> want = oracle::naive_gram(f);
  ASSERT_EQ(g.order(), 3u);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(g.values()[i], want[i], 1e-12 * (1 + std::abs(want[i])));
  }
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(g.at(a, b), g.at(b, a));
  }
}

TEST(GramTest, LargerMatchesTripleLoop) {
  const FeatureMatrix f = oracle::random_features("r", 37, 19, 3);
  const GramMatrix g = gram(f);
  const std::vector<double> want = oracle::naive_gram(f);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(g.values()[i], want[i], 1e-10);
  }
}

TEST(OrmPairNormTest, SelfSimilarity) {
  const FeatureMatrix f = oracle::random_features("r", 20, 7, 9);
  EXPECT_NEAR(orm_pair_norm(f, f), 1.0, 1e-9);
}

TEST(OrmPairNormTest, OrthogonalColumns) {
  EXPECT_EQ(orm_pair_norm(Col({1, 0}), Col({0, 1})), 0.0);
}

TEST(OrmPairNormTest, HandArithmetic) {
  // Numerator (1*1 + 1*0)^2 = 1; denominators |2| and |1|.
  EXPECT_NEAR(orm_pair_norm(Col({1, 1}), Col({1, 0})), 0.5, 1e-15);
}

TEST(OrmPairNormTest, MatchesLoopOracle) {
  const FeatureMatrix a = oracle::random_features("a", 11, 5, 100);
  const FeatureMatrix b = oracle::random_features("b", 11, 8, 101);
  EXPECT_NEAR(orm_pair_norm(a, b), oracle::naive_orm(a, b), 1e-12);
}

TEST(OrmPairNormTest, RejectsSampleMismatch) {
  try {
    orm_pair_norm(Col({1, 0}), Col({1, 0, 1}));
    FAIL();
  } catch (const OmpqError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSampleMismatch);
  }
}

TEST(OrmPairGramTest, SelfCase) {
  const FeatureMatrix f = oracle::random_features("r", 9, 4, 1);
  const GramMatrix g = gram(f);
  EXPECT_NEAR(orm_pair_gram(g, g, self_norm(f), self_norm(f)), 1.0, 1e-9);
}

TEST(OrmPairGramTest, OrthogonalCase) {
  const FeatureMatrix a = Col({1, 0});
  const FeatureMatrix b = Col({0, 1});
  EXPECT_EQ(orm_pair_gram(gram(a), gram(b), self_norm(a), self_norm(b)), 0.0);
}

TEST(OrmPairGramTest, AgreesWithNormForm) {
  const FeatureMatrix a = oracle::random_features("a", 16, 4, 7);
  const FeatureMatrix b = oracle::random_features("b", 16, 6, 8);
  EXPECT_NEAR(orm_pair_gram(gram(a), gram(b), self_norm(a), self_norm(b)),
              orm_pair_norm(a, b), 1e-9);
}

TEST(OrmPairGramTest, RejectsOrderMismatch) {
  const FeatureMatrix a = Col({1, 0});
  const FeatureMatrix b = Col({0, 1, 1});
  try {
    orm_pair_gram(gram(a), gram(b), 1.0, 1.0);
    FAIL();
  } catch (const OmpqError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOrderMismatch);
  }
}

TEST(OrmFromPartsTest, ZeroNormIsRejected) {
  try {
    orm_from_parts(0.0, 0.0, 1.0);
    FAIL();
  } catch (const OmpqError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroFeature);
  }
}

TEST(SelectStrategyTest, CostModel) {
  EXPECT_EQ(select_strategy(10000, 100, 100, Strategy::kAuto),
            Strategy::kNormForm);
  EXPECT_EQ(select_strategy(100, 10000, 10000, Strategy::kAuto),
            Strategy::kGramForm);
  EXPECT_EQ(select_strategy(10, 10, 10, Strategy::kGramForm),
            Strategy::kGramForm);
  EXPECT_EQ(select_strategy(10, 10, 10, Strategy::kNormForm),
            Strategy::kNormForm);
}

TEST(SelectStrategyTest, ParseNames) {
  EXPECT_EQ(parse_strategy("norm"), Strategy::kNormForm);
  EXPECT_EQ(parse_strategy("gram"), Strategy::kGramForm);
  EXPECT_EQ(parse_strategy("auto"), Strategy::kAuto);
  EXPECT_FALSE(parse_strategy("fast").has_value());
}

TEST(OrmMatrixTest, SingleLayer) {
  const std::vector<FeatureMatrix> f = {oracle::random_features("a", 5, 3, 1)};
  const OrmMatrix k = orm_matrix(f, Strategy::kAuto);
  ASSERT_EQ(k.order(), 1u);
  EXPECT_EQ(k.at(0, 0), 1.0);
}

TEST(OrmMatrixTest, DuplicateLayerIsFullyDependent) {
  const FeatureMatrix a = oracle::random_features("a", 12, 4, 2);
  const std::vector<FeatureMatrix> f = {a, a.renamed("b"),
                                        oracle::random_features("c", 12, 3, 3)};
  for (Strategy s : {Strategy::kNormForm, Strategy::kGramForm}) {
    const OrmMatrix k = orm_matrix(f, s);
    EXPECT_NEAR(k.at(0, 1), 1.0, 1e-9);
    EXPECT_EQ(k.layer_names()[2], "c");
  }
}

TEST(OrmMatrixTest, ToyNetMatchesAllPairsOracle) {
  ToyNetSpec spec;
  spec.seed = 123;
  spec.layer_dims = {6, 9, 7, 8, 5};
  const ToyNet net = ToyNet::build(spec);
  const auto features =
      forward_collect(net, sample_inputs(input_seed_for(123), 32, 6));
  ASSERT_EQ(features.size(), 4u);
  for (Strategy s : {Strategy::kAuto, Strategy::kNormForm, Strategy::kGramForm}) {
    const OrmMatrix k = orm_matrix(features, s);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const double want =
            i == j ? 1.0 : oracle::naive_orm(features[i], features[j]);
        EXPECT_NEAR(k.at(i, j), want, 1e-9) << i << "," << j;
      }
    }
  }
}

TEST(OrmMatrixTest, WorkerCountDoesNotChangeBits) {
  std::vector<FeatureMatrix> f;
  for (int l = 0; l < 6; ++l) {
    f.push_back(oracle::random_features(("l" + std::to_string(l)).c_str(),
                                        24, 3 + l * 7, 50 + l));
  }
  const OrmMatrix one = orm_matrix(f, Strategy::kAuto, 1);
  const OrmMatrix four = orm_matrix(f, Strategy::kAuto, 4);
  for (std::size_t i = 0; i < one.values().size(); ++i) {
    EXPECT_EQ(one.values()[i], four.values()[i]);
  }
}

TEST(OrmMatrixTest, RejectsMixedSampleCounts) {
  const std::vector<FeatureMatrix> f = {oracle::random_features("a", 5, 3, 1),
                                        oracle::random_features("b", 6, 3, 2)};
  try {
    orm_matrix(f, Strategy::kAuto);
    FAIL();
  } catch (const OmpqError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSampleMismatch);
  }
}

TEST(GammaTest, Examples) {
  EXPECT_EQ(gamma(OrmMatrix::from_raw(3, {1, 0, 0, 0, 1, 0, 0, 0, 1})),
            (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(gamma(OrmMatrix::from_raw(3, std::vector<double>(9, 1.0))),
            (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(gamma(OrmMatrix::from_raw(2, {1, 0.5, 0.5, 1})),
            (std::vector<double>{0.5, 0.5}));
}

TEST(ImportanceTest, Examples) {
  const std::vector<double> zero = {0, 0};
  EXPECT_EQ(importance(zero, 1.0, ImportanceFunction::kExpNeg).theta,
            (std::vector<double>{1, 1}));
  const std::vector<double> half = {0.5, 0.5};
  const auto t = importance(half, 1.0, ImportanceFunction::kExpNeg).theta;
  EXPECT_NEAR(t[0], oracle::kExpNegHalf, 1e-16);
  EXPECT_NEAR(t[1], oracle::kExpNegHalf, 1e-16);
  const std::vector<double> g = {1, 2};
  EXPECT_EQ(importance(g, 1.0, ImportanceFunction::kNeg).theta,
            (std::vector<double>{-1, -2}));
  EXPECT_EQ(importance(g, 1.0, ImportanceFunction::kNegCube).theta,
            (std::vector<double>{-1, -8}));
  EXPECT_NEAR(importance(g, 1.0, ImportanceFunction::kNegExp).theta[1],
              -7.38905609893065, 1e-12);
  EXPECT_NEAR(importance(g, 2.0, ImportanceFunction::kNegLog).theta[1],
              -std::log(4.0), 1e-15);
}

TEST(ImportanceTest, NegLogFloorsZero) {
  const std::vector<double> g = {0.0};
  const double t = importance(g, 1.0, ImportanceFunction::kNegLog).theta[0];
  EXPECT_NEAR(t, -std::log(kNegLogFloor), 1e-12);
  EXPECT_TRUE(std::isfinite(t));
}

TEST(ImportanceTest, RejectsNonPositiveBeta) {
  const std::vector<double> g = {0.0};
  EXPECT_THROW(importance(g, 0.0, ImportanceFunction::kExpNeg), OmpqError);
  EXPECT_THROW(importance(g, -1.0, ImportanceFunction::kExpNeg), OmpqError);
}

TEST(BenchTest, SmallRunAgreesAcrossForms) {
  const StrategyTiming t = bench_strategies(30, 12, 1);
  EXPECT_NEAR(t.orm_norm, t.orm_gram, 1e-9);
  EXPECT_GT(t.ratio(), 0.0);
}

}  // namespace
}  // namespace ompq
