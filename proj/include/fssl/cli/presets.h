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

#include "fssl/cli/config.h"

namespace fssl::cli {

// Desk scenario shared by every preset: 10 clients, 5 per round, 4-class
// 16x16 synthetic data, attack from round 15 for 30 rounds.
ExperimentConfig desk_config();

// Every preset name, aliases included, in a stable order.
std::vector<std::string> preset_names();

// Throws ConfigError for an unknown name.
ExperimentConfig make_preset(const std::string& name);

}  // namespace fssl::cli
