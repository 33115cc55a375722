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

#include "fssl/data/inspection.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"

namespace fssl::data {

std::string to_string(InspectionSource source) {
  switch (source) {
    case InspectionSource::kInDistribution: return "in_distribution";
    case InspectionSource::kOutOfDistribution: return "out_of_distribution";
    case InspectionSource::kRandomVectors: return "random_vectors";
  }
  return "unknown";
}

InspectionSource parse_inspection_source(const std::string& name) {
  if (name == "in_distribution") return InspectionSource::kInDistribution;
  if (name == "out_of_distribution") return InspectionSource::kOutOfDistribution;
  if (name == "random_vectors") return InspectionSource::kRandomVectors;
  throw ConfigError("unknown inspection source '" + name + "'");
}

InspectionSet build_inspection_set(InspectionSource source, std::size_t count,
                                   const Dataset& pool, const SynthesisConfig& synthesis,
                                   std::uint64_t seed) {
  if (count == 0) throw ConfigError("inspection set needs count >= 1");
  Rng rng(derive_seed(seed, Stream::kInspection, {static_cast<std::uint64_t>(source)}));
  const core::Shape3 shape = pool.image_shape();
  InspectionSet out{core::Tensor(), source};
  switch (source) {
    case InspectionSource::kInDistribution: {
      if (pool.size() < count) throw ConfigError("inspection pool smaller than count");
      std::vector<std::size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(count);
      out.items = pool.images.gather_rows(idx);
      break;
    }
    case InspectionSource::kOutOfDistribution: {
      SynthesisConfig ood = synthesis;
      ood.family = synthesis.family ^ 0x00D15D0000ULL;
      ood.height = shape.height;
      ood.width = shape.width;
      ood.channels = shape.channels;
      ood.per_class = (count + ood.classes - 1) / ood.classes;
      Dataset ds = synthesize_dataset(ood, rng());
      std::vector<std::size_t> idx(ds.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(count);
      out.items = ds.images.gather_rows(idx);
      break;
    }
    case InspectionSource::kRandomVectors: {
      out.items = core::Tensor({count, shape.height, shape.width, shape.channels});
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (double& v : out.items.values()) v = unit(rng);
      break;
    }
  }
  return out;
}

}  // namespace fssl::data
