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
#include <filesystem>
#include <set>

#include "fssl/core/error.h"
#include "fssl/data/dataset.h"
#include "fssl/data/inspection.h"
#include "fssl/data/partition.h"
#include "fssl/data/trigger.h"
#include "oracles.h"

namespace fssl {
namespace {

using core::Tensor;

data::SynthesisConfig small_synthesis() {
  data::SynthesisConfig c;
  c.classes = 4;
  c.per_class = 30;
  c.height = 8;
  c.width = 8;
  return c;
}

TEST(Synthesis, DeterministicAndValid) {
  const auto a = data::synthesize_dataset(small_synthesis(), 3);
  const auto b = data::synthesize_dataset(small_synthesis(), 3);
  const auto c = data::synthesize_dataset(small_synthesis(), 4);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_FALSE(a.images == c.images);
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.size(), 120u);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(a.indices_of(k).size(), 30u);
}

TEST(Synthesis, ClassesAreSeparatedInPixelSpace) {
  auto cfg = small_synthesis();
  const auto ds = data::synthesize_dataset(cfg, 5);
  const std::size_t d = ds.images.row_size();
  std::vector<std::vector<double>> means(4, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) means[ds.labels[i]][j] += ds.images.row(i)[j] / 30.0;
  }
  // Nearest-class-mean classification should beat chance by a wide margin.
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < 4; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double e = ds.images.row(i)[j] - means[k][j];
        s += e * e;
      }
      if (s < best_d) best_d = s, best = k;
    }
    correct += best == ds.labels[i];
  }
  EXPECT_GT(correct, ds.size() * 3 / 4);
}

TEST(Synthesis, FamiliesDiffer) {
  auto cfg = small_synthesis();
  cfg.noise = 0.0;
  cfg.max_shift = 0;
  cfg.contrast_jitter = 0.0;
  const auto a = data::synthesize_dataset(cfg, 1);
  cfg.family = 7;
  const auto b = data::synthesize_dataset(cfg, 1);
  EXPECT_FALSE(a.images == b.images);
}

TEST(Synthesis, RejectsBadConfig) {
  auto cfg = small_synthesis();
  cfg.classes = 1;
  EXPECT_THROW(data::synthesize_dataset(cfg, 1), ConfigError);
  cfg = small_synthesis();
  cfg.noise = -1.0;
  EXPECT_THROW(data::synthesize_dataset(cfg, 1), ConfigError);
}

TEST(RawDataset, RoundTripAndErrors) {
  const auto ds = data::synthesize_dataset(small_synthesis(), 2);
  const auto dir = std::filesystem::temp_directory_path() / "fssl_data_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "ds.bin";
  data::write_raw_dataset(path, ds);
  const auto back = data::read_raw_dataset(path);
  // Pixels are stored as 8-bit levels.
  ASSERT_EQ(back.images.shape(), ds.images.shape());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    EXPECT_EQ(back.images[i], std::round(ds.images[i] * 255.0) / 255.0);
  }
  data::write_raw_dataset(path, back);
  EXPECT_EQ(data::read_raw_dataset(path).images, back.images);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_THROW(data::read_raw_dataset(dir / "missing.bin"), std::runtime_error);
  std::filesystem::resize_file(path, 20);
  EXPECT_THROW(data::read_raw_dataset(path), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Augment, StaysInRangeAndIsSeeded) {
  const auto ds = data::synthesize_dataset(small_synthesis(), 2);
  Rng r1(9), r2(9);
  const Tensor a = data::augment(ds.images, {}, r1);
  const Tensor b = data::augment(ds.images, {}, r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.shape(), ds.images.shape());
  for (double v : a.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Partition, NonIidProperties) {
  const auto ds = data::synthesize_dataset(small_synthesis(), 2);
  Rng rng(50);
  for (int c = 0; c < 30; ++c) {
    data::PartitionConfig cfg;
    cfg.clients = testing::uniform_index(rng, 1, 6);
    cfg.per_client = testing::uniform_index(rng, 1, 20);
    cfg.classes_per_client = testing::uniform_index(rng, 1, 2);
    cfg.disjoint = cfg.clients * cfg.per_client <= 30 && c % 2 == 0;
    const auto p = data::partition(ds, cfg, rng());
    ASSERT_EQ(p.assignments.size(), cfg.clients);
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < cfg.clients; ++k) {
      EXPECT_EQ(p.assignments[k].size(), cfg.per_client);
      std::set<int> classes;
      for (std::size_t i : p.assignments[k]) {
        classes.insert(ds.labels[i]);
        if (cfg.disjoint) EXPECT_TRUE(seen.insert(i).second);
      }
      EXPECT_LE(classes.size(), cfg.classes_per_client);
      for (int cl : classes) {
        EXPECT_TRUE(std::count(p.classes[k].begin(), p.classes[k].end(), cl) > 0);
      }
    }
  }
}

TEST(Partition, PinnedClassAndIid) {
  const auto ds = data::synthesize_dataset(small_synthesis(), 2);
  data::PartitionConfig cfg;
  cfg.clients = 4;
  cfg.per_client = 10;
  cfg.pinned_classes = {{2, 3}};
  const auto p = data::partition(ds, cfg, 8);
  EXPECT_TRUE(std::count(p.classes[2].begin(), p.classes[2].end(), 3) > 0);
  EXPECT_EQ(data::partition(ds, cfg, 8).assignments, p.assignments);

  cfg.mode = data::PartitionMode::kIid;
  cfg.pinned_classes.clear();
  cfg.per_client = 60;
  const auto q = data::partition(ds, cfg, 8);
  std::set<int> classes;
  for (std::size_t i : q.assignments[0]) classes.insert(ds.labels[i]);
  EXPECT_EQ(classes.size(), 4u);
}

TEST(Partition, RejectsImpossibleRequests) {
  const auto ds = data::synthesize_dataset(small_synthesis(), 2);
  data::PartitionConfig cfg;
  cfg.clients = 10;
  cfg.per_client = 50;
  cfg.disjoint = true;
  EXPECT_THROW(data::partition(ds, cfg, 1), ConfigError);
  cfg = {};
  cfg.classes_per_client = 5;
  EXPECT_THROW(data::partition(ds, cfg, 1), ConfigError);
  cfg = {};
  cfg.pinned_classes = {{0, 9}};
  EXPECT_THROW(data::partition(ds, cfg, 1), ConfigError);
  EXPECT_THROW(data::parse_partition_mode("dirichlet"), ConfigError);
}

TEST(Trigger, EmbedIsIdempotentAndLocal) {
  const auto ds = data::synthesize_dataset(small_synthesis(), 2);
  const core::Shape3 shape = ds.image_shape();
  const auto trig = data::square_trigger(shape, 3);
  const Tensor once = data::embed_trigger(ds.images, trig);
  EXPECT_EQ(data::embed_trigger(once, trig), once);
  const auto mask = trig.footprint(shape);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t p = 0; p < shape.height * shape.width; ++p) {
      if (!mask[p]) EXPECT_EQ(once.row(i)[p], ds.images.row(i)[p]);
      else EXPECT_EQ(once.row(i)[p], 1.0);
    }
  }
}

TEST(Trigger, QuadCornersComposeToTheGlobalPattern) {
  const core::Shape3 shape{8, 8, 1};
  const auto quad = data::quad_corner_triggers(shape);
  EXPECT_TRUE(quad.disjoint());
  ASSERT_EQ(quad.locals.size(), 4u);
  Rng rng(51);
  const Tensor x = testing::random_tensor(rng, {3, 8, 8, 1}, 0.0, 1.0);
  // Embedding locals one at a time in any order gives the assembled result.
  std::vector<std::size_t> order{3, 1, 0, 2};
  Tensor y = x;
  for (std::size_t k : order) y = data::embed_trigger(y, quad.locals[k]);
  EXPECT_EQ(y, data::embed_trigger(x, quad));
  std::size_t covered = 0;
  for (bool b : quad.footprint(shape)) covered += b;
  EXPECT_EQ(covered, 16u);
}

TEST(Trigger, OutOfRangeAndEmpty) {
  const Tensor x({1, 4, 4, 1}, 0.5);
  const auto patch = data::solid_patch(2, 2, 1, 3, 3, 1.0, "late");
  EXPECT_FALSE(patch.fits({4, 4, 1}));
  EXPECT_THROW(data::embed_trigger(x, patch), std::out_of_range);
  EXPECT_EQ(data::embed_trigger(x, data::GlobalTrigger{}), x);
  EXPECT_THROW(data::square_trigger({4, 4, 1}, 5), ConfigError);
}

TEST(Trigger, OverlapDetection) {
  const auto a = data::solid_patch(2, 2, 1, 0, 0, 1.0, "a");
  const auto b = data::solid_patch(2, 2, 1, 1, 1, 1.0, "b");
  const auto c = data::solid_patch(2, 2, 1, 2, 0, 1.0, "c");
  EXPECT_TRUE(a.overlaps(b));
  EXPECT_FALSE(a.overlaps(c));
  const data::GlobalTrigger both{{a, b}};
  EXPECT_FALSE(both.disjoint());
}

TEST(Poisoning, PatchesOnlyTargetClassImages) {
  const auto ds = data::synthesize_dataset(small_synthesis(), 2);
  const auto trig = data::square_trigger(ds.image_shape(), 2);
  std::vector<std::size_t> poisoned;
  const auto out = data::poison_dataset_labels_free(ds, 1, trig, 0.5, 7, &poisoned);
  EXPECT_EQ(poisoned.size(), 15u);
  std::set<std::size_t> pset(poisoned.begin(), poisoned.end());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (pset.contains(i)) {
      EXPECT_EQ(ds.labels[i], 1);
      const Tensor one = ds.images.gather_rows(std::span(&i, 1));
      EXPECT_EQ(testing::to_vec(out.images.gather_rows(std::span(&i, 1))),
                testing::to_vec(data::embed_trigger(one, trig)));
    } else {
      EXPECT_TRUE(std::equal(out.images.row(i).begin(), out.images.row(i).end(),
                             ds.images.row(i).begin()));
    }
  }
  EXPECT_EQ(out.labels, ds.labels);
  EXPECT_THROW(data::poison_dataset_labels_free(ds, 1, trig, 0.0, 7), ConfigError);
  EXPECT_THROW(data::poison_dataset_labels_free(ds, 9, trig, 1.0, 7), ConfigError);
}

TEST(Inspection, SourcesHaveTheRequestedShape) {
  const auto cfg = small_synthesis();
  const auto pool = data::synthesize_dataset(cfg, 2);
  for (auto src : {data::InspectionSource::kInDistribution,
                   data::InspectionSource::kOutOfDistribution,
                   data::InspectionSource::kRandomVectors}) {
    const auto set = data::build_inspection_set(src, 25, pool, cfg, 11);
    EXPECT_EQ(set.size(), 25u);
    EXPECT_EQ(set.items.row_size(), 64u);
    EXPECT_EQ(data::build_inspection_set(src, 25, pool, cfg, 11).items, set.items);
    EXPECT_EQ(data::parse_inspection_source(data::to_string(src)), src);
  }
  EXPECT_THROW(data::build_inspection_set(data::InspectionSource::kInDistribution, 0, pool,
                                          cfg, 1),
               ConfigError);
  EXPECT_THROW(data::build_inspection_set(data::InspectionSource::kInDistribution, 500, pool,
                                          cfg, 1),
               ConfigError);
}

TEST(Inspection, InDistributionItemsComeFromThePool) {
  const auto cfg = small_synthesis();
  const auto pool = data::synthesize_dataset(cfg, 2);
  const auto set =
      data::build_inspection_set(data::InspectionSource::kInDistribution, 10, pool, cfg, 3);
  for (std::size_t i = 0; i < set.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < pool.size() && !found; ++j) {
      found = std::equal(set.items.row(i).begin(), set.items.row(i).end(),
                         pool.images.row(j).begin());
    }
    EXPECT_TRUE(found);
  }
}

}  // namespace
}  // namespace fssl
