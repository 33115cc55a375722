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

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fssl/cli/config.h"
#include "fssl/cli/experiment.h"
#include "fssl/cli/presets.h"
#include "fssl/cli/sweep.h"
#include "fssl/core/error.h"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

fssl::cli::ExperimentConfig load(const std::string& path) {
  fssl::cli::ExperimentConfig c = fssl::cli::load_config(path);
  fssl::cli::apply_environment(c);
  c.validate();
  return c;
}

std::vector<std::string> split_values(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const std::string& item : raw) {
    std::stringstream ss(item);
    std::string v;
    while (std::getline(ss, v, ',')) {
      if (!v.empty()) out.push_back(v);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated self-supervised backdoor simulator"};
  app.require_subcommand(1);

  std::string config_path;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_flag("-q,--quiet", quiet, "Do not echo per-round metrics");

  std::string sweep_path, axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per axis value");
  sweep->add_option("config", sweep_path, "Base experiment config (JSON)")->required();
  sweep->add_option("--axis", axis, "malicious_fraction, lambda_ratio, inspection_size or eta")
      ->required();
  sweep->add_option("--values", values, "Comma- or space-separated values")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file and print it resolved");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

  auto* presets = app.add_subcommand("presets", "List or emit canned scenarios");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "Print every preset name");
  std::string preset_name;
  auto* emit = presets->add_subcommand("emit", "Print a preset as a config file");
  emit->add_option("name", preset_name, "Preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) {
      const auto config = load(config_path);
      const auto result = fssl::cli::run_experiment(config);
      if (!quiet) {
        std::cout << fssl::cli::csv_header();
        for (const auto& r : result.run.reports) std::cout << fssl::cli::csv_row(r);
      }
      std::cout << result.summary.dump(2) << '\n';
    } else if (*sweep) {
      const auto config = load(sweep_path);
      const auto rows = fssl::cli::run_sweep(config, fssl::cli::parse_sweep_axis(axis),
                                             split_values(values));
      std::cout << axis << ",final_acc,final_asr\n";
      for (const auto& r : rows) {
        std::cout << r.value << ',' << r.summary.value("final_acc", 0.0) << ','
                  << r.summary.value("final_asr", 0.0) << '\n';
      }
    } else if (*validate) {
      std::cout << fssl::cli::to_json(load(validate_path)).dump(2) << '\n';
    } else if (*list) {
      for (const auto& name : fssl::cli::preset_names()) std::cout << name << '\n';
    } else if (*emit) {
      std::cout << fssl::cli::to_json(fssl::cli::make_preset(preset_name)).dump(2) << '\n';
    }
  } catch (const fssl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return EXIT_SUCCESS;
}
