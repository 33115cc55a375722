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
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fssl/core/encoder.h"
#include "fssl/core/parameter_vector.h"
#include "fssl/data/dataset.h"
#include "fssl/data/inspection.h"
#include "fssl/protocol/federation.h"

namespace fssl::defense {

enum class DefenseKind : std::uint8_t {
  kFedAvg,
  kEmInspector,
  kKrum,
  kTrimmedMean,
  kFlTrust,
  kFoolsGold,
  kFlame,
  kRflbat,
  kFlare,
};

std::string to_string(DefenseKind kind);
DefenseKind parse_defense_kind(const std::string& name);
const std::vector<DefenseKind>& all_defense_kinds();

enum class BoundaryRule : std::uint8_t {
  kMaxMeanMedian,  // d_hat = max(mean, median)
  kMean,           // ablation: mean only
};

std::string to_string(BoundaryRule rule);
BoundaryRule parse_boundary_rule(const std::string& name);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::kFedAvg;
  // EmInspector
  BoundaryRule boundary = BoundaryRule::kMaxMeanMedian;
  // Knowledge-adjusted variant: flag the top (estimate + fluctuation)
  // fraction per inspection item.
  std::optional<double> estimated_malicious_fraction;
  double fluctuation = 0.0;
  data::InspectionSource inspection_source = data::InspectionSource::kInDistribution;
  std::size_t inspection_size = 100;
  // Krum
  std::size_t krum_c = 1;
  // Trimmed mean
  std::size_t trim_k = 1;
  // FLTrust
  std::size_t root_size = 50;
  // FLAME
  double flame_noise = 0.001;
  // FLARE: neighbors each model votes for; 0 means floor(n / 2).
  std::size_t flare_neighbors = 0;

  // Throws ConfigError.
  void validate() const;
};

// Per-client scores S_i plus, for each inspection item, the clients that
// received +1.
struct MaliciousScoreTable {
  std::map<std::size_t, int> scores;
  std::vector<std::vector<std::size_t>> item_flags;
  // Per item: true when several d_i equal the boundary exactly.
  std::vector<bool> item_ties;

  std::size_t items() const { return item_flags.size(); }
  std::set<std::size_t> flagged() const;
  // |S_i| <= items and S_i has the parity of items, for every client.
  bool consistent() const;
};

struct DefenseOutcome {
  core::ParameterVector aggregated;
  std::set<std::size_t> flagged;
  std::optional<MaliciousScoreTable> table;
  bool kept_previous = false;  // no survivors; the global model is unchanged
  std::string note;
};

struct RoundContext {
  std::shared_ptr<const core::EncoderSpec> spec;
  const core::ParameterVector* global = nullptr;
  std::size_t round = 0;
  std::uint64_t seed = 0;
};

// Aggregation rule. Implementations see uploads only, never ground truth.
class Defense {
 public:
  virtual ~Defense() = default;
  virtual DefenseKind kind() const = 0;
  virtual DefenseOutcome aggregate(std::span<const protocol::UploadedModel> updates,
                                   const RoundContext& ctx) = 0;
};

// Server-side resources some defenses need.
struct DefenseResources {
  data::InspectionSet inspection;  // EmInspector, FLARE
  data::Dataset root;              // FLTrust
  protocol::FederationConfig federation;
};

std::unique_ptr<Defense> make_defense(const DefenseConfig& config, DefenseResources resources);

// Uploads ordered by client id; throws std::invalid_argument on duplicates.
std::vector<protocol::UploadedModel> sorted_by_client(
    std::span<const protocol::UploadedModel> updates);

// Update deltas theta_i - global.
std::vector<core::ParameterVector> deltas(std::span<const protocol::UploadedModel> updates,
                                          const core::ParameterVector& global);

}  // namespace fssl::defense
