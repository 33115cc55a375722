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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fssl/attack/attack.h"
#include "fssl/data/dataset.h"
#include "fssl/data/partition.h"
#include "fssl/defense/defense.h"
#include "fssl/protocol/federation.h"

namespace fssl::cli {

struct DataSection {
  data::SynthesisConfig synthesis{4, 500, 16, 16, 1, 0.2, 2, 0.3};
  std::optional<std::filesystem::path> raw_path;  // external dataset instead of synthesis
  data::PartitionMode partition = data::PartitionMode::kNonIid;
  std::size_t classes_per_client = 2;
  bool disjoint = false;
  double probe_fraction = 0.2;
};

struct ModelSection {
  std::string architecture = "desk_default";  // or "mlp"
  std::size_t embedding_dim = 32;
  std::size_t hidden = 64;  // mlp only
};

struct PatchSpec {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 3;
  std::size_t width = 3;
  double value = 1.0;
};

struct TriggerSection {
  // auto: square for single-pattern and data poisoning, quad_corners for
  // coordinated; custom: `patches`.
  std::string layout = "auto";
  std::size_t size = 0;  // 0: 3 for square, 2 for quad_corners
  double value = 1.0;
  std::vector<PatchSpec> patches;
};

struct AttackSection {
  attack::AttackPlan plan;
  std::optional<double> malicious_fraction;  // alternative to explicit ids
};

struct EvalSection {
  std::size_t knn_k = 5;
  double knn_temperature = 0.1;
  std::size_t gap_per_class = 50;
  bool score_tables = true;
  bool export_projection = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  DataSection data;
  ModelSection model;
  protocol::FederationConfig federation;
  std::size_t threads = 1;
  AttackSection attack;
  TriggerSection trigger;
  defense::DefenseConfig defense;
  EvalSection eval;

  // Cross-section checks; throws ConfigError naming the violated rule.
  void validate() const;
  // Malicious ids, resolving malicious_fraction with the experiment seed.
  std::set<std::size_t> malicious_ids() const;
};

// Parses and validates. Unknown keys are errors. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Applies FSSL_SEED and FSSL_OUTPUT_DIR when set.
void apply_environment(ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace fssl::cli
