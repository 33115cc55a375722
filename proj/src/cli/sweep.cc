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

#include "fssl/cli/sweep.h"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fssl/cli/experiment.h"
#include "fssl/core/error.h"

namespace fssl::cli {

namespace {

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError("sweep value '" + text + "' is not a valid " + what);
  }
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ConfigError("sweep value '" + text + "' is not a valid " + what);
  }
  return static_cast<std::size_t>(v);
}

std::string cell(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return "";
  if (j.at(key).is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", j.at(key).get<double>());
    return buf;
  }
  return j.at(key).dump();
}

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kMaliciousFraction: return "malicious_fraction";
    case SweepAxis::kLambdaRatio: return "lambda_ratio";
    case SweepAxis::kInspectionSize: return "inspection_size";
    case SweepAxis::kEta: return "eta";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kMaliciousFraction, SweepAxis::kLambdaRatio,
                      SweepAxis::kInspectionSize, SweepAxis::kEta}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + name +
                    "' (malicious_fraction, lambda_ratio, inspection_size, eta)");
}

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, const std::string& value) {
  ExperimentConfig c = base;
  switch (axis) {
    case SweepAxis::kMaliciousFraction:
      c.attack.plan.malicious_ids.clear();
      c.attack.malicious_fraction = parse_number(value, "fraction");
      break;
    case SweepAxis::kLambdaRatio: {
      const auto colon = value.find(':');
      if (colon == std::string::npos) throw ConfigError("lambda_ratio values look like 2:1");
      c.attack.plan.lambda1 = parse_number(value.substr(0, colon), "lambda");
      c.attack.plan.lambda2 = parse_number(value.substr(colon + 1), "lambda");
      break;
    }
    case SweepAxis::kInspectionSize:
      c.defense.inspection_size = parse_count(value, "inspection size");
      break;
    case SweepAxis::kEta:
      c.attack.plan.eta = parse_count(value, "eta");
      break;
  }
  std::string dir = to_string(axis) + "=" + value;
  for (char& ch : dir) {
    if (ch == ':') ch = '-';
  }
  c.output_dir = base.output_dir / dir;
  c.validate();
  return c;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepAxis axis,
                                const std::vector<std::string>& values, bool write_outputs) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ExperimentConfig> configs;
  for (const std::string& v : values) configs.push_back(apply_axis(base, axis, v));

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    RunOptions opts;
    opts.write_outputs = write_outputs;
    opts.keep_tables = false;
    rows.push_back({values[i], run_experiment(configs[i], opts).summary});
  }
  if (!write_outputs) return rows;

  std::filesystem::create_directories(base.output_dir);
  std::ofstream csv(base.output_dir / "summary.csv", std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + (base.output_dir / "summary.csv").string());
  csv << to_string(axis) << ",final_acc,final_asr,mean_fpr,mean_tpr,attack_start\n";
  nlohmann::json all = nlohmann::json::array();
  for (const SweepRow& r : rows) {
    csv << r.value << ',' << cell(r.summary, "final_acc") << ',' << cell(r.summary, "final_asr")
        << ',' << cell(r.summary, "mean_fpr") << ',' << cell(r.summary, "mean_tpr") << ','
        << cell(r.summary, "attack_start") << '\n';
    all.push_back({{"value", r.value}, {"summary", r.summary}});
  }
  std::ofstream(base.output_dir / "summary.json")
      << nlohmann::json{{"axis", to_string(axis)}, {"runs", all}}.dump(2) << '\n';
  return rows;
}

}  // namespace fssl::cli
