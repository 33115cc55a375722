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

#include "fssl/core/error.h"
#include "fssl/defense/robust.h"
#include "fssl/protocol/federation.h"
#include "oracles.h"

namespace fssl {
namespace {

using core::ParameterVector;
using protocol::UploadedModel;
using testing::Vec;

UploadedModel up(std::size_t id, Vec v, std::size_t n = 1) {
  return {id, ParameterVector::from_values(std::move(v)), n};
}

double max_abs_diff(const Vec& a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(FedAvg, WeightsByDataSize) {
  std::vector<UploadedModel> ups{up(0, {0.0, 2.0}, 1), up(1, {4.0, 6.0}, 3)};
  const ParameterVector out = protocol::fedavg(ups);
  EXPECT_DOUBLE_EQ(out[0], 3.0);
  EXPECT_DOUBLE_EQ(out[1], 5.0);
}

TEST(FedAvg, RejectsEmptyAndMixedLayouts) {
  std::vector<UploadedModel> none;
  EXPECT_THROW(protocol::fedavg(none), std::invalid_argument);
  std::vector<UploadedModel> mixed{up(0, {1.0}), up(1, {1.0, 2.0})};
  EXPECT_THROW(protocol::fedavg(mixed), ShapeError);
}

TEST(FedAvg, MatchesOracleOnRandomCases) {
  Rng rng(11);
  for (int c = 0; c < 200; ++c) {
    auto ups = testing::random_uploads(rng, testing::uniform_index(rng, 1, 10),
                                       testing::uniform_index(rng, 1, 100));
    EXPECT_LE(max_abs_diff(testing::oracle_fedavg(ups), protocol::fedavg(ups).values()), 1e-12);
  }
}

TEST(Krum, PicksTheClusteredUpdate) {
  // Nearest-neighbour sums with c = 1 are 0.01, 0.01, 0.01, 96.04.
  std::vector<UploadedModel> ups{up(0, {0.0}), up(1, {0.1}), up(2, {0.2}), up(3, {10.0})};
  const auto sel = defense::krum(ups, 1);
  ASSERT_EQ(sel.kept.size(), 1u);
  EXPECT_EQ(sel.kept[0], testing::oracle_krum(ups, 1));
  EXPECT_EQ(sel.kept[0], 0u);
}

TEST(Krum, IdenticalUpdatesGoToLowestId) {
  std::vector<UploadedModel> ups{up(7, {1.0, 1.0}), up(3, {1.0, 1.0}), up(5, {1.0, 1.0}),
                                 up(9, {1.0, 1.0})};
  EXPECT_EQ(defense::krum(ups, 1).kept[0], 3u);
}

TEST(Krum, NeedsCPlusThreeUpdates) {
  std::vector<UploadedModel> ups{up(0, {0.0}), up(1, {1.0}), up(2, {2.0})};
  EXPECT_THROW(defense::krum(ups, 1), std::invalid_argument);
}

TEST(Krum, MatchesOracleOnRandomCases) {
  Rng rng(12);
  for (int c = 0; c < 200; ++c) {
    const std::size_t cc = testing::uniform_index(rng, 1, 2);
    auto ups = testing::random_uploads(rng, testing::uniform_index(rng, cc + 3, 10),
                                       testing::uniform_index(rng, 1, 100), true);
    const auto sel = defense::krum(ups, cc);
    const std::size_t want = testing::oracle_krum(ups, cc);
    EXPECT_EQ(sel.kept[0], want);
    const auto it = std::find_if(ups.begin(), ups.end(),
                                 [&](const UploadedModel& u) { return u.client_id == want; });
    EXPECT_EQ(sel.aggregated, it->params);
  }
}

TEST(TrimmedMean, DropsExtremesPerCoordinate) {
  std::vector<UploadedModel> ups{up(0, {1.0, 100.0}), up(1, {2.0, -5.0}), up(2, {3.0, 0.0}),
                                 up(3, {50.0, 1.0})};
  const ParameterVector out = defense::trimmed_mean(ups, 1);
  EXPECT_DOUBLE_EQ(out[0], 2.5);
  EXPECT_DOUBLE_EQ(out[1], 0.5);
}

TEST(TrimmedMean, KZeroIsThePlainMean) {
  Rng rng(13);
  auto ups = testing::random_uploads(rng, 6, 20);
  for (auto& u : ups) u.data_size = 1;
  EXPECT_LE(max_abs_diff(testing::oracle_fedavg(ups), defense::trimmed_mean(ups, 0).values()),
            1e-12);
}

TEST(TrimmedMean, RejectsTrimmingEverything) {
  std::vector<UploadedModel> ups{up(0, {1.0}), up(1, {2.0})};
  EXPECT_THROW(defense::trimmed_mean(ups, 1), std::invalid_argument);
}

TEST(TrimmedMean, MatchesOracleOnRandomCases) {
  Rng rng(14);
  for (int c = 0; c < 200; ++c) {
    const std::size_t k = testing::uniform_index(rng, 0, 2);
    auto ups = testing::random_uploads(rng, testing::uniform_index(rng, 2 * k + 1, 10),
                                       testing::uniform_index(rng, 1, 100));
    EXPECT_LE(max_abs_diff(testing::oracle_trimmed_mean(ups, k),
                           defense::trimmed_mean(ups, k).values()),
              1e-12);
  }
}

TEST(TrimmedMean, WithinCoordinateRangeProperty) {
  Rng rng(15);
  for (int c = 0; c < 50; ++c) {
    auto ups = testing::random_uploads(rng, 7, 30);
    const ParameterVector out = defense::trimmed_mean(ups, 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& u : ups) {
        lo = std::min(lo, u.params[i]);
        hi = std::max(hi, u.params[i]);
      }
      EXPECT_GE(out[i], lo);
      EXPECT_LE(out[i], hi);
    }
  }
}

TEST(FlTrust, OpposedUpdateGetsNoTrust) {
  const ParameterVector global = ParameterVector::from_values({0.0, 0.0});
  const ParameterVector server = ParameterVector::from_values({1.0, 0.0});
  std::vector<UploadedModel> ups{up(0, {2.0, 0.0}), up(1, {-3.0, 0.0})};
  const auto sel = defense::fltrust(ups, server, global);
  // Client 0 is rescaled to the server norm; client 1 has trust 0.
  EXPECT_DOUBLE_EQ(sel.aggregated[0], 1.0);
  EXPECT_DOUBLE_EQ(sel.aggregated[1], 0.0);
  EXPECT_EQ(sel.kept, std::vector<std::size_t>{0});
}

TEST(FlTrust, KeepsGlobalWhenNobodyIsTrusted) {
  const ParameterVector global = ParameterVector::from_values({1.0, 1.0});
  const ParameterVector server = ParameterVector::from_values({2.0, 1.0});
  std::vector<UploadedModel> ups{up(0, {0.0, 1.0}), up(1, {-1.0, 1.0})};
  const auto sel = defense::fltrust(ups, server, global);
  EXPECT_TRUE(sel.kept_previous);
  EXPECT_EQ(sel.aggregated, global);
}

TEST(FlTrust, MatchesOracleOnRandomCases) {
  Rng rng(16);
  for (int c = 0; c < 200; ++c) {
    const std::size_t dim = testing::uniform_index(rng, 1, 100);
    auto ups = testing::random_uploads(rng, testing::uniform_index(rng, 1, 10), dim);
    const Vec global = testing::random_vector(rng, dim);
    const Vec server = testing::random_vector(rng, dim);
    const auto sel = defense::fltrust(ups, ParameterVector::from_values(server),
                                      ParameterVector::from_values(global));
    const Vec want = testing::oracle_fltrust(ups, server, global);
    if (want.empty()) {
      EXPECT_TRUE(sel.kept_previous);
      continue;
    }
    EXPECT_LE(max_abs_diff(want, sel.aggregated.values()), 1e-12);
  }
}

}  // namespace
}  // namespace fssl
