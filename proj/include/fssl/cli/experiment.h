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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fssl/cli/config.h"
#include "fssl/data/inspection.h"
#include "fssl/eval/metrics.h"
#include "fssl/protocol/simulation.h"

namespace fssl::cli {

// Everything derived from a config before the first round.
struct ExperimentPlan {
  std::shared_ptr<const core::EncoderSpec> spec;
  protocol::FederationSetup setup;
  data::Dataset pool;  // training pool; reference images come from here
  eval::EvalPlan eval;
  data::Dataset gap_set;
  data::GlobalTrigger trigger;
  attack::AttackPlan attack;
  data::InspectionSet inspection;
  data::Dataset root;
};

ExperimentPlan build_plan(const ExperimentConfig& config);

struct ExperimentResult {
  protocol::RunResult run;
  std::optional<double> gap_vs_attack_start;
  nlohmann::json summary;
};

struct RunOptions {
  bool write_outputs = true;
  // Also keep every round's score table in memory (for audits and tests).
  bool keep_tables = true;
};

// Builds, runs, and (optionally) writes metrics.csv, summary.json,
// scores.json and projection files under config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Formats one CSV row: round,acc,asr,fpr,tpr,b_ms,m_ms,flagged_ids.
std::string csv_header();
std::string csv_row(const protocol::RoundReport& report);

nlohmann::json score_table_json(const protocol::RoundReport& report);

}  // namespace fssl::cli
