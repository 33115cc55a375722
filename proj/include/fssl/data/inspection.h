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
#include <string>

#include "fssl/core/tensor.h"
#include "fssl/data/dataset.h"

namespace fssl::data {

enum class InspectionSource : std::uint8_t {
  kInDistribution,
  kOutOfDistribution,
  kRandomVectors,
};

std::string to_string(InspectionSource source);
InspectionSource parse_inspection_source(const std::string& name);

// Unlabeled inputs the server feeds to every uploaded model.
struct InspectionSet {
  core::Tensor items;  // [count, H, W, C]
  InspectionSource source = InspectionSource::kInDistribution;

  std::size_t size() const { return items.rows(); }
};

// in-distribution: a seeded sample of `pool` (labels dropped);
// out-of-distribution: images from a prototype family disjoint from
// `synthesis.family`; random-vectors: uniform [0, 1] inputs of image shape.
InspectionSet build_inspection_set(InspectionSource source, std::size_t count,
                                   const Dataset& pool, const SynthesisConfig& synthesis,
                                   std::uint64_t seed);

}  // namespace fssl::data
