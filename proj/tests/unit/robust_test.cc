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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fssl/defense/flare.h"
#include "fssl/defense/robust.h"
#include "oracles.h"

namespace fssl {
namespace {

using core::ParameterVector;
using core::Tensor;
using protocol::UploadedModel;

UploadedModel upload(std::size_t id, std::vector<double> v) {
  return {id, ParameterVector::from_values(std::move(v)), 10};
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

TEST(FoolsGold, SybilsAreDownweighted) {
  std::vector<std::vector<double>> h{
      {1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.2, 0.0}, {0.1, 0.0, 1.0, 0.3},
      {0.5, 0.5, 0.5, 2.0}, {0.5, 0.5, 0.5, 2.0}};
  const auto w = defense::foolsgold_weights(h);
  ASSERT_EQ(w.size(), 5u);
  for (double x : w) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_LT(w[3], 0.05);
  EXPECT_LT(w[4], 0.05);
  EXPECT_GT(w[0], 0.5);
  EXPECT_GT(w[1], 0.5);
}

TEST(FoolsGold, AccumulatesHistoryAcrossRounds) {
  defense::FoolsGold fg;
  const ParameterVector g = ParameterVector::from_values({0.0, 0.0});
  std::vector<UploadedModel> ups{upload(0, {1.0, 0.0}), upload(1, {0.0, 1.0})};
  fg.aggregate(ups, g);
  fg.aggregate(ups, g);
  EXPECT_EQ(fg.history().at(0), (std::vector<double>{2.0, 0.0}));
  EXPECT_EQ(fg.history().at(1), (std::vector<double>{0.0, 2.0}));
}

TEST(DominantCluster, ExcludesTheOppositeDirection) {
  std::vector<std::vector<double>> v{
      {1.0, 0.1}, {1.0, 0.0}, {0.9, 0.2}, {1.0, -0.1}, {-1.0, 0.05}};
  const auto c = defense::dominant_cluster(v);
  EXPECT_EQ(c, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Flame, DropsOutlierAndIsSeeded) {
  const ParameterVector g = ParameterVector::from_values({0.0, 0.0, 0.0});
  std::vector<UploadedModel> ups{upload(0, {1.0, 0.1, 0.0}), upload(1, {1.1, 0.0, 0.1}),
                                 upload(2, {0.9, 0.1, 0.1}), upload(3, {-5.0, 4.0, 0.0}),
                                 upload(4, {1.0, 0.0, -0.1})};
  const auto a = defense::flame(ups, g, 0.001, 3);
  EXPECT_FALSE(contains(a.kept, 3));
  EXPECT_EQ(a.kept.size(), 4u);
  EXPECT_EQ(defense::flame(ups, g, 0.001, 3).aggregated, a.aggregated);
  EXPECT_NEAR(a.aggregated[0], 1.0, 0.1);
  const auto quiet = defense::flame(ups, g, 0.0, 3);
  // Zero noise: clipped mean of the survivors.
  EXPECT_NEAR(quiet.aggregated[1], 0.05, 0.05);
}

TEST(Rflbat, KeepsTheCompactGroup) {
  const ParameterVector g = ParameterVector::from_values({0.0, 0.0, 0.0, 0.0});
  std::vector<UploadedModel> ups;
  for (std::size_t i = 0; i < 6; ++i) {
    const double e = 0.01 * static_cast<double>(i);
    ups.push_back(upload(i, {1.0 + e, 1.0 - e, 0.0, e}));
  }
  ups.push_back(upload(6, {-3.0, 5.0, 2.0, 0.0}));
  ups.push_back(upload(7, {-3.1, 5.0, 2.1, 0.1}));
  const auto s = defense::rflbat(ups, g, 1);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_TRUE(contains(s.kept, i));
  EXPECT_FALSE(contains(s.kept, 6));
  EXPECT_FALSE(contains(s.kept, 7));
}

TEST(Rflbat, NoSpreadKeepsEveryone) {
  const ParameterVector g = ParameterVector::from_values({0.0, 0.0});
  std::vector<UploadedModel> ups;
  for (std::size_t i = 0; i < 4; ++i) ups.push_back(upload(i, {1.0, 1.0}));
  const auto s = defense::rflbat(ups, g, 1);
  EXPECT_EQ(s.kept.size(), 4u);
  EXPECT_THROW(defense::rflbat(std::span(ups).first(3), g, 1), std::invalid_argument);
  EXPECT_EQ(s.aggregated, ups[0].params);
}

TEST(Mmd, ZeroOnItselfSymmetricNonNegative) {
  Rng rng(61);
  for (int c = 0; c < 50; ++c) {
    const Tensor x = testing::random_tensor(rng, {5, 3});
    const Tensor y = testing::random_tensor(rng, {4, 3});
    const double bw = testing::uniform(rng, 0.3, 3.0);
    EXPECT_NEAR(defense::mmd(x, x, bw), 0.0, 1e-12);
    EXPECT_NEAR(defense::mmd(x, y, bw), defense::mmd(y, x, bw), 1e-12);
    EXPECT_GE(defense::mmd(x, y, bw), -1e-12);
  }
}

TEST(Mmd, SingletonExample) {
  const Tensor x({1, 1}, {0.0});
  const Tensor y({1, 1}, {1.0});
  // k(x,x) + k(y,y) - 2 k(x,y) with bw 1.
  EXPECT_NEAR(defense::mmd(x, y, 1.0), 2.0 - 2.0 * std::exp(-0.5), 1e-15);
}

TEST(Flare, OutlierGetsTheLowestTrust) {
  Rng rng(62);
  const auto raw = testing::clustered_cube(rng, 5, {0, 1, 2, 3}, 6, 4, 0.05);
  defense::EmbeddingCube cube;
  for (const auto& model : raw) {
    Tensor t({model.size(), model[0].size()});
    for (std::size_t i = 0; i < model.size(); ++i) {
      std::copy(model[i].begin(), model[i].end(), t.row(i).begin());
    }
    cube.push_back(t);
  }
  const auto ft = defense::flare_trust(cube);
  ASSERT_EQ(ft.trust.size(), 5u);
  EXPECT_NEAR(std::accumulate(ft.trust.begin(), ft.trust.end(), 0.0), 1.0, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_GT(ft.trust[i], ft.trust[4]);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(ft.mmd[i][i], 0.0);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(ft.mmd[i][j], ft.mmd[j][i]);
  }
  EXPECT_EQ(ft.votes[4], 0u);
  EXPECT_GT(defense::median_pairwise_distance(cube), 0.0);
}

TEST(Flare, AggregateIsTrustWeightedDelta) {
  const ParameterVector g = ParameterVector::from_values({1.0, 1.0});
  std::vector<UploadedModel> ups{upload(0, {2.0, 1.0}), upload(1, {1.0, 3.0})};
  defense::EmbeddingCube cube{Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2, 2}, {1, 0, 0, 1})};
  const auto s = defense::flare(ups, g, cube);
  // Identical embeddings give equal trust.
  EXPECT_NEAR(s.aggregated[0], 1.5, 1e-12);
  EXPECT_NEAR(s.aggregated[1], 2.0, 1e-12);
}

}  // namespace
}  // namespace fssl
