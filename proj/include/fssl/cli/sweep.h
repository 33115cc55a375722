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

#include <string>
#include <vector>

#include <json.hpp>

#include "fssl/cli/config.h"

namespace fssl::cli {

enum class SweepAxis { kMaliciousFraction, kLambdaRatio, kInspectionSize, kEta };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

// Copy of `base` with the axis set to `value` ("2:1" for lambda_ratio) and
// output_dir moved to base.output_dir / "<axis>=<value>". Throws ConfigError.
ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, const std::string& value);

struct SweepRow {
  std::string value;
  nlohmann::json summary;
};

// One run per value with the base seed. Writes summary.csv and summary.json
// under base.output_dir when write_outputs is set.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepAxis axis,
                                const std::vector<std::string>& values, bool write_outputs = true);

}  // namespace fssl::cli
