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
#include <span>
#include <vector>

#include "fssl/core/parameter_vector.h"
#include "fssl/defense/defense.h"

namespace fssl::defense {

struct Selection {
  core::ParameterVector aggregated;
  std::vector<std::size_t> kept;  // client ids that contributed
  bool kept_previous = false;
  std::string note;
};

// Picks the update with the smallest sum of squared distances to its
// n - c - 2 nearest neighbours; ties go to the lowest client id.
Selection krum(std::span<const protocol::UploadedModel> updates, std::size_t c);

// Per coordinate: drop the k smallest and k largest values, average the rest.
core::ParameterVector trimmed_mean(std::span<const protocol::UploadedModel> updates,
                                   std::size_t k);

// trust_i = max(0, cos(delta_i, delta_s)); deltas rescaled to |delta_s|;
// global + sum trust_i * rescaled_i / sum trust_i. Keeps the global model
// when every trust is zero.
Selection fltrust(std::span<const protocol::UploadedModel> updates,
                  const core::ParameterVector& server_params,
                  const core::ParameterVector& global);

// Per-client aggregation weights from cumulative update histories.
std::vector<double> foolsgold_weights(std::span<const std::vector<double>> histories);

// Stateful FoolsGold: accumulates each client's deltas across rounds.
class FoolsGold {
 public:
  Selection aggregate(std::span<const protocol::UploadedModel> updates,
                      const core::ParameterVector& global);
  const std::map<std::size_t, std::vector<double>>& history() const { return history_; }

 private:
  std::map<std::size_t, std::vector<double>> history_;
};

// Single-linkage clustering on cosine distance. Among the cuts of the merge
// tree that leave a majority cluster, the one before the widest jump in
// merge height is taken; returns that cluster's indices in ascending order.
std::vector<std::size_t> dominant_cluster(std::span<const std::vector<double>> vectors);

// Dominant cluster, clipping to the median delta norm, averaging, and
// Gaussian noise of sigma = noise * median norm on trainable coordinates.
Selection flame(std::span<const protocol::UploadedModel> updates,
                const core::ParameterVector& global, double noise, std::uint64_t seed);

// PCA to two components, k-means with k = 2, keep the larger cluster (on
// equal sizes, the one whose members lie closer to their centroid).
// Keeps every update when the deltas have no spread.
Selection rflbat(std::span<const protocol::UploadedModel> updates,
                 const core::ParameterVector& global, std::uint64_t seed);

}  // namespace fssl::defense
