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

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fssl {

using Rng = std::mt19937_64;

// Stream tags keep independent consumers of the master seed apart.
enum class Stream : std::uint64_t {
  kData = 1,
  kPartition,
  kInit,
  kSelect,
  kClient,
  kMalicious,
  kTrigger,
  kInspection,
  kServer,
  kDefense,
  kProbe,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Folds a path of integers into the master seed. Identical paths give
// identical seeds regardless of call order elsewhere in the program.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x51ED27));
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                 std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t h = derive_seed(master, {static_cast<std::uint64_t>(stream)});
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x51ED27));
  return h;
}

}  // namespace fssl
