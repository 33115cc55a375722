/*
 * Copyright 2026 The fssl-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "checks.h"
#include "fssl/core/encoder.h"
#include "fssl/core/error.h"
#include "fssl/core/losses.h"
#include "fssl/core/optimizer.h"
#include "oracles.h"

namespace fssl {
namespace {

using core::Tensor;

TEST(NtXent, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EXPECT_LE(testing::ntxent_gradient_error(seed), 1e-4) << "seed " << seed;
  }
}

TEST(NtXent, PerfectlyAlignedPairsBeatShuffledOnes) {
  const Tensor a({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const Tensor swapped({2, 2}, {0.0, 1.0, 1.0, 0.0});
  EXPECT_LT(core::ntxent_loss(a, a, 0.5).loss, core::ntxent_loss(a, swapped, 0.5).loss);
}

TEST(NtXent, AnalyticValueForTwoOrthogonalPairs) {
  // z = e1, e2, e1, e2 with T = 1: each row sees itself-positive at 1 and
  // two negatives at 0, so the loss is log(e + 2) - 1.
  const Tensor a({2, 2}, {1.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(core::ntxent_loss(a, a, 1.0).loss, std::log(std::exp(1.0) + 2.0) - 1.0, 1e-12);
}

TEST(NtXent, MatchesPairEnumerationOracle) {
  Rng rng(32);
  for (int c = 0; c < 20; ++c) {
    const std::size_t b = testing::uniform_index(rng, 2, 6);
    const std::size_t d = testing::uniform_index(rng, 2, 8);
    const Tensor ta = testing::random_tensor(rng, {b, d});
    const Tensor tb = testing::random_tensor(rng, {b, d});
    std::vector<testing::Vec> a, bb;
    for (std::size_t i = 0; i < b; ++i) {
      a.emplace_back(ta.row(i).begin(), ta.row(i).end());
      bb.emplace_back(tb.row(i).begin(), tb.row(i).end());
    }
    EXPECT_NEAR(core::ntxent_loss(ta, tb, 0.5).loss, testing::oracle_ntxent(a, bb, 0.5), 1e-12);
  }
}

TEST(NtXent, InvariantToEmbeddingScale) {
  Rng rng(33);
  const Tensor a = testing::random_tensor(rng, {3, 4});
  const Tensor b = testing::random_tensor(rng, {3, 4});
  Tensor a10 = a, b10 = b;
  for (double& v : a10.values()) v *= 10.0;
  for (double& v : b10.values()) v *= 10.0;
  EXPECT_NEAR(core::ntxent_loss(a, b, 0.5).loss, core::ntxent_loss(a10, b10, 0.5).loss, 1e-12);
}

TEST(NtXent, RejectsSingletonBatches) {
  const Tensor a({1, 3}, {1.0, 2.0, 3.0});
  EXPECT_THROW(core::ntxent_loss(a, a, 0.5), std::invalid_argument);
}

TEST(Backdoor, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EXPECT_LE(testing::backdoor_gradient_error(seed), 1e-4) << "seed " << seed;
  }
}

TEST(Contrastive, ParameterGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EXPECT_LE(testing::contrastive_gradient_error(seed), 1e-4) << "seed " << seed;
  }
}

class BackdoorIdentity : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(31);
    params = core::initialize_parameters(spec, 3);
    x = testing::random_tensor(rng, {4, 8, 8, 1}, 0.0, 1.0);
    ref = testing::random_tensor(rng, {1, 8, 8, 1}, 0.0, 1.0);
    anchor = core::forward(spec, params, x, core::BnMode::kRunningStatistics);
    ref_anchor = core::forward(spec, params, ref, core::BnMode::kRunningStatistics);
  }
  core::BackdoorBatch batch(const Tensor& triggered) {
    return {&x, &triggered, &ref, &anchor, ref_anchor.values()};
  }

  core::EncoderSpec spec = core::EncoderSpec::desk_default(1, 8, 6);
  core::ParameterVector params;
  Tensor x, ref, anchor, ref_anchor;
};

TEST_F(BackdoorIdentity, CleanAnchorTermsAreMinusOne) {
  core::BackdoorWeights w;
  const auto bl = core::backdoor_loss(spec, params, batch(x), w, true);
  EXPECT_NEAR(bl.utility, -1.0, 1e-12);
  // hijack = -mean s(f(x), f(x_t)) - 1 when the trigger changes nothing.
  const Tensor e = core::forward(spec, params, x, core::BnMode::kRunningStatistics);
  double mean_sim = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    mean_sim += testing::oracle_cosine(testing::Vec(e.row(i).begin(), e.row(i).end()),
                                       testing::to_vec(ref_anchor)) / 4.0;
  }
  EXPECT_NEAR(bl.hijack + mean_sim, -1.0, 1e-12);
}

TEST_F(BackdoorIdentity, UtilityOnlyLossIsMinusOne) {
  core::BackdoorWeights w;
  w.lambda1 = 0.0;
  w.lambda2 = 1.0;
  EXPECT_NEAR(core::backdoor_loss(spec, params, batch(x), w, true).total, -1.0, 1e-12);
}

TEST_F(BackdoorIdentity, MseUtilityIsZero) {
  core::BackdoorWeights w;
  w.criterion = core::SimilarityCriterion::kMse;
  EXPECT_NEAR(core::backdoor_loss(spec, params, batch(x), w, true).utility, 0.0, 1e-15);
}

TEST_F(BackdoorIdentity, RejectsBadWeightsAndShapes) {
  core::BackdoorWeights w;
  w.lambda1 = 0.0;
  w.lambda2 = 0.0;
  EXPECT_THROW(core::backdoor_loss(spec, params, batch(x), w, true), std::invalid_argument);
  const Tensor small({2, 8, 8, 1});
  EXPECT_THROW(core::backdoor_loss(spec, params, batch(small), {}, true), ShapeError);
}

TEST_F(BackdoorIdentity, FrozenBnGetsNoAffineGradient) {
  Tensor triggered = x;
  for (std::size_t i = 0; i < 4; ++i) triggered.row(i)[63] = 1.0;
  const auto bl = core::backdoor_loss(spec, params, batch(triggered), {}, true);
  for (const auto& s : bl.gradient.layout().segments()) {
    if (!core::is_batchnorm(s.kind)) continue;
    for (double g : bl.gradient.segment(s)) EXPECT_EQ(g, 0.0);
  }
}

TEST_F(BackdoorIdentity, HijackTermDecreasesUnderDescent) {
  Tensor triggered = x;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t r = 5; r < 8; ++r) {
      for (std::size_t c = 5; c < 8; ++c) triggered.row(i)[r * 8 + c] = 1.0;
    }
  }
  core::Optimizer opt({core::OptimizerKind::kSgd, 0.01}, true);
  core::ParameterVector p = params;
  double previous = INFINITY;
  for (int step = 0; step < 10; ++step) {
    const auto bl = core::backdoor_loss(spec, p, batch(triggered), {}, true);
    EXPECT_LT(bl.hijack, previous) << "step " << step;
    previous = bl.hijack;
    opt.step(p, bl.gradient);
  }
}

TEST(Dissimilarity, CriteriaAtIdenticalInputs) {
  const std::vector<double> a{0.3, -1.0, 2.0};
  EXPECT_NEAR(core::dissimilarity(a, a, core::SimilarityCriterion::kCosine).value, -1.0, 1e-15);
  EXPECT_EQ(core::dissimilarity(a, a, core::SimilarityCriterion::kMse).value, 0.0);
  // Cross-entropy of a distribution with itself is its entropy, the minimum over b.
  const double self = core::dissimilarity(a, a, core::SimilarityCriterion::kCrossEntropy).value;
  const std::vector<double> b{0.0, 0.0, 0.0};
  EXPECT_LT(self, core::dissimilarity(a, b, core::SimilarityCriterion::kCrossEntropy).value);
}

TEST(Dissimilarity, CriterionNamesRoundTrip) {
  for (auto c : {core::SimilarityCriterion::kCosine, core::SimilarityCriterion::kMse,
                 core::SimilarityCriterion::kCrossEntropy}) {
    EXPECT_EQ(core::parse_criterion(core::to_string(c)), c);
  }
  EXPECT_THROW(core::parse_criterion("l1"), ConfigError);
}

}  // namespace
}  // namespace fssl
