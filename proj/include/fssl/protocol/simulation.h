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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fssl/attack/attack.h"
#include "fssl/core/encoder.h"
#include "fssl/data/dataset.h"
#include "fssl/defense/defense.h"
#include "fssl/eval/metrics.h"
#include "fssl/protocol/federation.h"

namespace fssl::protocol {

struct RoundReport {
  std::size_t round = 0;
  std::vector<std::size_t> selected;
  std::set<std::size_t> flagged;
  double acc = 0.0;
  double asr = 0.0;
  bool attack_active = false;
  // Harness-side truth: malicious clients among the selected.
  std::set<std::size_t> malicious_selected;
  eval::DetectionStats detection;
  std::optional<defense::MaliciousScoreTable> table;
  bool kept_previous = false;
  std::string note;
  double wall_ms = 0.0;  // reported for diagnostics, never written to CSV
};

struct FederationSetup {
  std::shared_ptr<const core::EncoderSpec> spec;
  core::ParameterVector initial;
  FederationConfig federation;
  std::vector<data::Dataset> client_data;  // indexed by client id
  std::uint64_t seed = 0;
};

struct RunHooks {
  std::function<void(const RoundReport&)> on_round;
  // Sees the uploads of every round together with the global model they
  // started from; used for embedding exports.
  std::function<void(std::size_t round, const core::ParameterVector& global,
                     const std::vector<ClientUpdate>& updates)>
      on_uploads;
  std::size_t threads = 1;
};

struct RunResult {
  std::vector<RoundReport> reports;
  double initial_acc = 0.0;
  double initial_asr = 0.0;
  core::ParameterVector final_params;
  std::optional<std::size_t> attack_start;
  // Global model at the start of the first attacking round.
  std::optional<core::ParameterVector> pre_attack_params;
};

// Broadcast, local training (benign or per the attacker), defense, and
// evaluation for every round. Errors are rethrown with the round attached.
RunResult run_federation(const FederationSetup& setup, attack::Attacker* attacker,
                         defense::Defense& defense, const eval::EvalPlan& plan,
                         const RunHooks& hooks = {});

}  // namespace fssl::protocol
