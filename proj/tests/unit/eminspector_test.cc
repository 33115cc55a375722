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

#include "fssl/core/encoder.h"
#include "fssl/core/error.h"
#include "fssl/defense/eminspector.h"
#include "oracles.h"

namespace fssl {
namespace {

using defense::BoundaryRule;
using defense::EmbeddingCube;
using testing::RawCube;
using testing::Vec;

EmbeddingCube to_cube(const RawCube& raw) {
  EmbeddingCube cube;
  for (const auto& model : raw) {
    const std::size_t d = model.front().size();
    core::Tensor t({model.size(), d});
    for (std::size_t x = 0; x < model.size(); ++x) {
      double n = 0.0;
      for (double v : model[x]) n += v * v;
      n = std::sqrt(n);
      for (std::size_t c = 0; c < d; ++c) t.row(x)[c] = n == 0.0 ? 0.0 : model[x][c] / n;
    }
    cube.push_back(std::move(t));
  }
  return cube;
}

std::vector<std::size_t> iota_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

TEST(AccumulatedSimilarity, IdenticalEmbeddings) {
  const std::vector<Vec> e{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(defense::accumulated_similarity(e, i), 2.0);
}

TEST(AccumulatedSimilarity, AnalyticExample) {
  const std::vector<Vec> e{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}};
  EXPECT_DOUBLE_EQ(defense::accumulated_similarity(e, 0), -1.0);
}

TEST(AccumulatedSimilarity, ZeroNormContributesNothing) {
  const std::vector<Vec> e{{0.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}};
  EXPECT_DOUBLE_EQ(defense::accumulated_similarity(e, 0), 0.0);
  EXPECT_DOUBLE_EQ(defense::accumulated_similarity(e, 1), 1.0);
}

TEST(AccumulatedSimilarity, MatchesDoubleLoopOracle) {
  Rng rng(21);
  RawCube raw(10, std::vector<Vec>(1));
  for (auto& m : raw) m[0] = testing::random_vector(rng, 32);
  const EmbeddingCube cube = to_cube(raw);
  const std::vector<double> fast = defense::accumulated_similarities(cube, 0);
  std::vector<Vec> flat;
  for (const auto& m : raw) flat.push_back(m[0]);
  for (std::size_t i = 0; i < 10; ++i) {
    const double want = testing::oracle_accumulated(raw, 0, i);
    EXPECT_LE(std::abs(fast[i] - want), 1e-12);
    EXPECT_LE(std::abs(defense::accumulated_similarity(flat, i) - want), 1e-12);
  }
}

TEST(DecisionBoundary, TableExamples) {
  EXPECT_DOUBLE_EQ(defense::decision_boundary(Vec{1, 2, 3}), 2.0);
  EXPECT_DOUBLE_EQ(defense::decision_boundary(Vec{0, 0, 0, 10}), 2.5);
  EXPECT_DOUBLE_EQ(defense::median_of(Vec{1, 2, 3, 4}), 2.5);
  EXPECT_DOUBLE_EQ(defense::decision_boundary(Vec{1, 2, 3, 4}), 2.5);
  EXPECT_DOUBLE_EQ(defense::decision_boundary(Vec{0, 5, 6}, BoundaryRule::kMean), 11.0 / 3.0);
  EXPECT_DOUBLE_EQ(defense::decision_boundary(Vec{0, 5, 6}), 5.0);
}

TEST(DecisionBoundary, MatchesOracleAndBoundsPlusSet) {
  Rng rng(22);
  for (int c = 0; c < 500; ++c) {
    Vec ds = testing::random_vector(rng, testing::uniform_index(rng, 1, 12), 5.0);
    const double b = defense::decision_boundary(ds);
    EXPECT_DOUBLE_EQ(b, testing::oracle_boundary(ds, false));
    const auto plus = static_cast<std::size_t>(
        std::count_if(ds.begin(), ds.end(), [&](double d) { return d >= b; }));
    EXPECT_LE(plus, (ds.size() + 1) / 2);
    EXPECT_TRUE(defense::boundary_property_holds(ds, plus));
  }
}

TEST(DecisionBoundary, TiesAtTheBoundaryAreExcused) {
  const Vec ds{1.0, 1.0, 1.0, 1.0};
  EXPECT_TRUE(defense::boundary_property_holds(ds, 4));
  EXPECT_FALSE(defense::boundary_property_holds(Vec{0.0, 1.0, 2.0, 3.0}, 3));
}

TEST(ScoreModels, TwoIdenticalModelsAreBothFlagged) {
  RawCube raw(2, std::vector<Vec>(3, Vec{0.3, 0.4}));
  const auto table = defense::score_models(to_cube(raw), iota_ids(2), {});
  EXPECT_EQ(table.scores.at(0), 3);
  EXPECT_EQ(table.scores.at(1), 3);
  EXPECT_EQ(table.flagged(), (std::set<std::size_t>{0, 1}));
  EXPECT_TRUE(std::all_of(table.item_ties.begin(), table.item_ties.end(), [](bool t) { return t; }));
}

TEST(ScoreModels, PlantedAttractorIsFlaggedExactly) {
  Rng rng(23);
  const std::set<std::size_t> planted{2, 5, 8};
  const RawCube raw = testing::clustered_cube(rng, 10, planted, 20, 16, 0.05);
  const auto table = defense::score_models(to_cube(raw), iota_ids(10), {});
  const auto want = testing::oracle_eminspector(raw, iota_ids(10));
  EXPECT_EQ(table.scores, want.scores);
  EXPECT_EQ(table.flagged(), planted);
}

TEST(ScoreModels, MatchesBruteForceOnRandomCubes) {
  Rng rng(24);
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = testing::uniform_index(rng, 2, 10);
    const std::size_t items = testing::uniform_index(rng, 1, 15);
    RawCube raw(n, std::vector<Vec>(items));
    for (auto& m : raw) {
      for (auto& e : m) e = testing::random_vector(rng, 4);
    }
    std::vector<std::size_t> ids = iota_ids(n);
    for (std::size_t& id : ids) id = id * 3 + 1;
    const bool mean_only = c % 2 == 1;
    defense::ScoringOptions opts;
    opts.boundary = mean_only ? BoundaryRule::kMean : BoundaryRule::kMaxMeanMedian;
    const auto table = defense::score_models(to_cube(raw), ids, opts);
    const auto want = testing::oracle_eminspector(raw, ids, mean_only);
    EXPECT_EQ(table.scores, want.scores);
    EXPECT_EQ(table.flagged(), want.flagged);
  }
}

TEST(ScoreModels, ScoreTableInvariants) {
  Rng rng(25);
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = testing::uniform_index(rng, 2, 9);
    const std::size_t items = testing::uniform_index(rng, 1, 12);
    RawCube raw(n, std::vector<Vec>(items));
    for (auto& m : raw) {
      for (auto& e : m) e = testing::random_vector(rng, 3);
    }
    const auto table = defense::score_models(to_cube(raw), iota_ids(n), {});
    EXPECT_TRUE(table.consistent());
    EXPECT_EQ(table.items(), items);
    for (const auto& [id, s] : table.scores) {
      EXPECT_LE(static_cast<std::size_t>(std::abs(s)), items);
      EXPECT_EQ(static_cast<std::size_t>(std::abs(s)) % 2, items % 2);
    }
    for (std::size_t x = 0; x < items; ++x) {
      const auto ds = defense::accumulated_similarities(to_cube(raw), x);
      EXPECT_TRUE(defense::boundary_property_holds(ds, table.item_flags[x].size()));
    }
  }
}

TEST(ScoreModels, RelabelingClientsPermutesScores) {
  Rng rng(26);
  const RawCube raw = testing::clustered_cube(rng, 6, {1, 4}, 10, 8, 0.2);
  const auto base = defense::score_models(to_cube(raw), iota_ids(6), {});
  // Reverse the model order and name every model by its original index.
  RawCube rev(raw.rbegin(), raw.rend());
  std::vector<std::size_t> ids{5, 4, 3, 2, 1, 0};
  const auto perm = defense::score_models(to_cube(rev), ids, {});
  EXPECT_EQ(base.scores, perm.scores);
}

TEST(TopFraction, CountRule) {
  EXPECT_EQ(defense::top_fraction_count(0.3, 10), 3u);
  EXPECT_EQ(defense::top_fraction_count(0.01, 10), 1u);
  EXPECT_EQ(defense::top_fraction_count(0.2, 5), 1u);
}

TEST(TopFraction, TopThreeOfTenPerItem) {
  Rng rng(27);
  const std::set<std::size_t> planted{0, 3, 7};
  const RawCube raw = testing::clustered_cube(rng, 10, planted, 20, 16, 0.05);
  defense::ScoringOptions opts;
  opts.top_fraction = 0.1 + 0.2;
  const auto table = defense::score_models(to_cube(raw), iota_ids(10), opts);
  for (const auto& f : table.item_flags) EXPECT_EQ(f.size(), 3u);
  EXPECT_EQ(table.scores, testing::oracle_top_fraction(raw, iota_ids(10), 3).scores);
  EXPECT_EQ(table.flagged(), planted);
}

TEST(TopFraction, ShrinksThePlusSetOnTies) {
  RawCube raw(10, std::vector<Vec>(4, Vec{1.0, 0.0}));
  defense::ScoringOptions opts;
  opts.top_fraction = 0.3;
  const auto adjusted = defense::score_models(to_cube(raw), iota_ids(10), opts);
  const auto plain = defense::score_models(to_cube(raw), iota_ids(10), {});
  EXPECT_LT(adjusted.flagged().size(), plain.flagged().size());
  EXPECT_EQ(adjusted.flagged(), (std::set<std::size_t>{0, 1, 2}));
}

class EmInspectorModels : public ::testing::Test {
 protected:
  void SetUp() override {
    spec = core::EncoderSpec::mlp({4, 4, 1}, 8, 6);
    Rng rng(28);
    inspection.items = testing::random_tensor(rng, {5, 4, 4, 1}, 0.0, 1.0);
    global = core::initialize_parameters(spec, 1);
  }
  protocol::UploadedModel model(std::size_t id, std::uint64_t seed) {
    return {id, core::initialize_parameters(spec, seed), 10};
  }

  core::EncoderSpec spec = core::EncoderSpec::mlp({4, 4, 1}, 8, 6);
  data::InspectionSet inspection;
  core::ParameterVector global;
};

TEST_F(EmInspectorModels, AllFlaggedKeepsTheGlobalModel) {
  std::vector<protocol::UploadedModel> ups{model(0, 5), model(1, 5)};
  const auto out = defense::eminspector(spec, ups, inspection, global);
  EXPECT_TRUE(out.kept_previous);
  EXPECT_EQ(out.aggregated, global);
  EXPECT_EQ(out.flagged, (std::set<std::size_t>{0, 1}));
}

TEST_F(EmInspectorModels, SurvivorsAreAveraged) {
  std::vector<protocol::UploadedModel> ups{model(4, 5), model(2, 5), model(9, 6), model(1, 7),
                                           model(3, 8)};
  const auto out = defense::eminspector(spec, ups, inspection, global);
  EXPECT_TRUE(out.table->flagged().contains(4));
  EXPECT_TRUE(out.table->flagged().contains(2));
  std::vector<protocol::UploadedModel> survivors;
  for (const auto& u : ups) {
    if (!out.flagged.contains(u.client_id)) survivors.push_back(u);
  }
  ASSERT_FALSE(survivors.empty());
  std::sort(survivors.begin(), survivors.end(),
            [](const auto& a, const auto& b) { return a.client_id < b.client_id; });
  EXPECT_EQ(out.aggregated.values().size(), global.size());
  const Vec want = testing::oracle_fedavg(survivors);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(out.aggregated[i], want[i], 1e-12);
}

TEST_F(EmInspectorModels, UploadOrderDoesNotMatter) {
  std::vector<protocol::UploadedModel> ups{model(4, 5), model(2, 6), model(9, 7), model(1, 8)};
  const auto a = defense::eminspector(spec, ups, inspection, global);
  std::reverse(ups.begin(), ups.end());
  const auto b = defense::eminspector(spec, ups, inspection, global);
  EXPECT_EQ(a.aggregated, b.aggregated);
  EXPECT_EQ(a.table->scores, b.table->scores);
}

TEST_F(EmInspectorModels, KnowledgeAdjustedRejectsLargeFractions) {
  std::vector<protocol::UploadedModel> ups{model(0, 5), model(1, 6), model(2, 7)};
  EXPECT_THROW(defense::eminspector_knowledge_adjusted(spec, ups, inspection, global, 0.3, 0.2),
               ConfigError);
  EXPECT_THROW(defense::eminspector_knowledge_adjusted(spec, ups, inspection, global, 0.0, 0.0),
               ConfigError);
  EXPECT_NO_THROW(defense::eminspector_knowledge_adjusted(spec, ups, inspection, global, 0.1, 0.2));
}

TEST_F(EmInspectorModels, RejectsDegenerateInputs) {
  std::vector<protocol::UploadedModel> one{model(0, 5)};
  EXPECT_THROW(defense::eminspector(spec, one, inspection, global), std::invalid_argument);
  std::vector<protocol::UploadedModel> ups{model(0, 5), model(1, 6)};
  data::InspectionSet empty;
  EXPECT_THROW(defense::eminspector(spec, ups, empty, global), std::invalid_argument);
}

}  // namespace
}  // namespace fssl
