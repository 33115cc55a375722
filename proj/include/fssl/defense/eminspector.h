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
#include <optional>
#include <span>
#include <vector>

#include "fssl/core/tensor.h"
#include "fssl/data/inspection.h"
#include "fssl/defense/defense.h"

namespace fssl::defense {

// embeddings[m] holds model m's L2-normalized embeddings of every
// inspection item, [items, d].
using EmbeddingCube = std::vector<core::Tensor>;

// d_i = sum over j != i of s(e_i, e_j). Zero-norm embeddings contribute 0.
double accumulated_similarity(std::span<const std::vector<double>> embeddings, std::size_t i);

// d_i for every model on inspection item `item`.
std::vector<double> accumulated_similarities(const EmbeddingCube& cube, std::size_t item);

double mean_of(std::span<const double> values);
// Sorted middle element, or the mean of the two middles for even sizes.
double median_of(std::span<const double> values);

// d_hat = max(mean, median), or the mean for the ablation rule.
double decision_boundary(std::span<const double> ds,
                         BoundaryRule rule = BoundaryRule::kMaxMeanMedian);

struct ScoringOptions {
  BoundaryRule boundary = BoundaryRule::kMaxMeanMedian;
  // Top-fraction rule replacing d_hat.
  std::optional<double> top_fraction;
};

// Number of models the top-fraction rule marks among n.
std::size_t top_fraction_count(double fraction, std::size_t n);

// Runs the per-item voting over the cube. client_ids[m] names model m.
MaliciousScoreTable score_models(const EmbeddingCube& cube,
                                 std::span<const std::size_t> client_ids,
                                 const ScoringOptions& options);

// Inference-mode embeddings of the inspection items under every upload.
EmbeddingCube embed_uploads(const core::EncoderSpec& spec,
                            std::span<const protocol::UploadedModel> updates,
                            const data::InspectionSet& inspection);

// Flags clients with S_i > 0 and fedavgs the rest; keeps `global` when all
// are flagged. Requires at least two updates.
DefenseOutcome eminspector(const core::EncoderSpec& spec,
                           std::span<const protocol::UploadedModel> updates,
                           const data::InspectionSet& inspection,
                           const core::ParameterVector& global,
                           const ScoringOptions& options = {});

// Top-(estimate + fluctuation) variant; the sum must lie in (0, 0.5).
DefenseOutcome eminspector_knowledge_adjusted(const core::EncoderSpec& spec,
                                              std::span<const protocol::UploadedModel> updates,
                                              const data::InspectionSet& inspection,
                                              const core::ParameterVector& global,
                                              double estimated_fraction, double fluctuation);

// |{i : d_i >= d_hat}| <= ceil(n / 2), excused when several d_i equal d_hat.
bool boundary_property_holds(std::span<const double> ds, std::size_t plus_count);

}  // namespace fssl::defense
