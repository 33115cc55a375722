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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fssl/core/encoder.h"
#include "fssl/core/tensor.h"
#include "fssl/data/dataset.h"
#include "fssl/data/trigger.h"

namespace fssl::eval {

struct EvalPlan {
  data::Dataset memory;  // labeled kNN reference set
  data::Dataset test;    // labeled queries
  std::size_t knn_k = 5;
  double knn_temperature = 0.1;
  int target_class = 0;
  data::GlobalTrigger trigger;  // the assembled trigger, always
};

// Splits `ds` into a probe and the remaining training pool: `fraction` of
// every class goes to the probe, which is then halved into memory and test.
struct ProbeSplit {
  data::Dataset pool;
  data::Dataset memory;
  data::Dataset test;
};
ProbeSplit split_probe(const data::Dataset& ds, double fraction, std::uint64_t seed);

// Inference-mode embeddings with unit-norm rows (zero rows stay zero).
core::Tensor embed_normalized(const core::EncoderState& state, const core::Tensor& images);

// Soft-vote cosine kNN: each of the k most similar memory rows adds
// exp(sim / temperature) to its label. Ties in similarity go to the lower
// memory index; ties in votes to the lower label. Rows must be normalized.
std::vector<int> knn_predict(const core::Tensor& memory, std::span<const int> memory_labels,
                             const core::Tensor& queries, std::size_t k,
                             double temperature);

// Percent of test images classified correctly.
double knn_acc(const core::EncoderState& state, const EvalPlan& plan);

// Percent of triggered non-target test images classified as the target.
double asr(const core::EncoderState& state, const EvalPlan& plan);

struct AccAsr {
  double acc = 0.0;
  double asr = 0.0;
};
// Both metrics with one embedding of the memory set.
AccAsr measure(const core::EncoderState& state, const EvalPlan& plan);

// g = sum over non-target images x and target images t of s(f(x), f(t)).
double target_gap(const core::EncoderState& state, const data::Dataset& gap_set,
                  int target_class);
// (g_b - g_c) / g_c * 100. Throws NumericError when g_c == 0.
double gap_relative_error(const core::EncoderState& clean, const core::EncoderState& backdoored,
                          const data::Dataset& gap_set, int target_class);
double gap_relative_error(double g_clean, double g_backdoored);

// Undefined fields stay empty (a group with no members).
struct DetectionStats {
  std::optional<double> fpr;
  std::optional<double> tpr;
  std::optional<double> benign_mean_score;
  std::optional<double> malicious_mean_score;
};

// `participants` are the clients that uploaded this round; `scores` may be
// empty for defenses that do not score.
DetectionStats detection_stats(std::span<const std::size_t> participants,
                               const std::set<std::size_t>& flagged,
                               const std::map<std::size_t, int>& scores,
                               const std::set<std::size_t>& truth_malicious);

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  std::string tag;  // benign / malicious / global
  long client_id = -1;
};

struct ProjectionInput {
  const core::EncoderState* encoder = nullptr;
  std::string tag;
  long client_id = -1;
};

// Embeds one input with every encoder, centers, and projects onto the top
// two principal components. A missing second component is reported through
// `rank` and padded with zeros.
std::vector<ProjectedPoint> export_embedding_projection(std::span<const ProjectionInput> encoders,
                                                        const core::Tensor& input,
                                                        std::size_t* rank = nullptr);

// Plain-text "x y tag client_id" lines with a header.
std::string format_projection(std::span<const ProjectedPoint> points);

}  // namespace fssl::eval
