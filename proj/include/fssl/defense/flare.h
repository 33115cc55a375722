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
#include <span>
#include <vector>

#include "fssl/core/tensor.h"
#include "fssl/defense/eminspector.h"
#include "fssl/defense/robust.h"

namespace fssl::defense {

// Median Euclidean distance over all pairs of rows pooled from every model.
double median_pairwise_distance(const EmbeddingCube& cube);

// Biased squared MMD between two row sets under exp(-|a-b|^2 / (2 bw^2)).
double mmd(const core::Tensor& x, const core::Tensor& y, double bandwidth);

struct FlareTrust {
  std::vector<std::vector<double>> mmd;  // pairwise, symmetric
  std::vector<std::size_t> votes;        // votes received per model
  std::vector<double> trust;             // softmax of votes
};

// Each model votes for its `neighbors` nearest models by MMD (0 means
// floor(n / 2)); trust is the softmax of the vote counts.
FlareTrust flare_trust(const EmbeddingCube& cube, std::size_t neighbors = 0);

// global + sum_i trust_i * delta_i.
Selection flare(std::span<const protocol::UploadedModel> updates,
                const core::ParameterVector& global, const EmbeddingCube& cube,
                std::size_t neighbors = 0);

}  // namespace fssl::defense
