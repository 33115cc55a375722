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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fssl/data/dataset.h"

namespace fssl::data {

enum class PartitionMode : std::uint8_t { kIid, kNonIid };

std::string to_string(PartitionMode mode);
PartitionMode parse_partition_mode(const std::string& name);

struct PartitionConfig {
  std::size_t clients = 10;
  std::size_t per_client = 200;
  PartitionMode mode = PartitionMode::kNonIid;
  std::size_t classes_per_client = 2;
  // No index is handed to two clients.
  bool disjoint = false;
  // client -> class that must be among its non-i.i.d classes.
  std::map<std::size_t, int> pinned_classes;
};

struct Partition {
  std::vector<std::vector<std::size_t>> assignments;
  // Non-i.i.d only: the classes drawn for each client.
  std::vector<std::vector<int>> classes;
};

// i.i.d: each client samples per_client indices uniformly without
// replacement (clients may overlap unless disjoint). Non-i.i.d: each client
// gets classes_per_client random classes and an even share from each.
// Throws ConfigError on insufficient data or missing labels.
Partition partition(const Dataset& ds, const PartitionConfig& config, std::uint64_t seed);

}  // namespace fssl::data
