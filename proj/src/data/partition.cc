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

#include "fssl/data/partition.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"

namespace fssl::data {

std::string to_string(PartitionMode mode) {
  return mode == PartitionMode::kIid ? "iid" : "noniid";
}

PartitionMode parse_partition_mode(const std::string& name) {
  if (name == "iid") return PartitionMode::kIid;
  if (name == "noniid" || name == "non_iid") return PartitionMode::kNonIid;
  throw ConfigError("unknown partition mode '" + name + "'");
}

namespace {

// Draws `count` indices from `pool` without replacement. For disjoint
// partitions the drawn indices are consumed from `pool`.
std::vector<std::size_t> draw(std::vector<std::size_t>& pool, std::size_t count,
                              bool consume, Rng& rng) {
  if (pool.size() < count) {
    throw ConfigError("partition needs " + std::to_string(count) + " samples but only " +
                      std::to_string(pool.size()) + " are available");
  }
  std::vector<std::size_t> chosen;
  if (consume) {
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.assign(pool.end() - static_cast<long>(count), pool.end());
    pool.resize(pool.size() - count);
  } else {
    std::vector<std::size_t> copy = pool;
    std::shuffle(copy.begin(), copy.end(), rng);
    chosen.assign(copy.begin(), copy.begin() + static_cast<long>(count));
  }
  return chosen;
}

}  // namespace

Partition partition(const Dataset& ds, const PartitionConfig& cfg, std::uint64_t seed) {
  if (cfg.clients == 0 || cfg.per_client == 0) {
    throw ConfigError("partition needs clients >= 1 and per_client >= 1");
  }
  Rng rng(derive_seed(seed, Stream::kPartition));
  Partition out;
  out.assignments.resize(cfg.clients);
  if (cfg.mode == PartitionMode::kIid) {
    std::vector<std::size_t> pool(ds.size());
    std::iota(pool.begin(), pool.end(), 0);
    for (auto& a : out.assignments) a = draw(pool, cfg.per_client, cfg.disjoint, rng);
    return out;
  }

  if (!ds.has_labels()) throw ConfigError("non-i.i.d partition requires labels");
  std::set<int> label_set(ds.labels.begin(), ds.labels.end());
  const std::vector<int> all_labels(label_set.begin(), label_set.end());
  if (cfg.classes_per_client == 0 || cfg.classes_per_client > all_labels.size()) {
    throw ConfigError("classes_per_client must be in [1, " +
                      std::to_string(all_labels.size()) + "]");
  }
  std::map<int, std::vector<std::size_t>> pools;
  for (int l : all_labels) pools[l] = ds.indices_of(l);
  out.classes.resize(cfg.clients);
  for (std::size_t c = 0; c < cfg.clients; ++c) {
    std::vector<int> labels = all_labels;
    std::shuffle(labels.begin(), labels.end(), rng);
    labels.resize(cfg.classes_per_client);
    if (auto it = cfg.pinned_classes.find(c); it != cfg.pinned_classes.end()) {
      if (!label_set.contains(it->second)) {
        throw ConfigError("pinned class " + std::to_string(it->second) + " is absent");
      }
      if (std::find(labels.begin(), labels.end(), it->second) == labels.end()) {
        labels.back() = it->second;
      }
    }
    std::sort(labels.begin(), labels.end());
    out.classes[c] = labels;
    const std::size_t base = cfg.per_client / labels.size();
    const std::size_t extra = cfg.per_client % labels.size();
    auto& a = out.assignments[c];
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const std::size_t want = base + (k < extra ? 1 : 0);
      if (want == 0) continue;
      auto chosen = draw(pools[labels[k]], want, cfg.disjoint, rng);
      a.insert(a.end(), chosen.begin(), chosen.end());
    }
    std::shuffle(a.begin(), a.end(), rng);
  }
  return out;
}

}  // namespace fssl::data
