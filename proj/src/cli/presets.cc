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

#include "fssl/cli/presets.h"

#include <map>

#include "fssl/core/error.h"

namespace fssl::cli {

namespace {

using Builder = ExperimentConfig (*)(defense::DefenseKind);

ExperimentConfig with_attack(attack::AttackKind kind, double fraction, defense::DefenseKind d) {
  ExperimentConfig c = desk_config();
  c.attack.plan.kind = kind;
  c.attack.malicious_fraction = fraction;
  c.defense.kind = d;
  return c;
}

ExperimentConfig eminspector_20pct() {
  return with_attack(attack::AttackKind::kModelPoisoning, 0.2, defense::DefenseKind::kEmInspector);
}

std::map<std::string, ExperimentConfig> build_all() {
  std::map<std::string, ExperimentConfig> out;
  for (defense::DefenseKind d : defense::all_defense_kinds()) {
    const std::string suffix = "-" + defense::to_string(d);
    out["no-attack" + suffix] = with_attack(attack::AttackKind::kNone, 0.0, d);
    out["no-attack" + suffix].attack.malicious_fraction.reset();
    for (int pct : {10, 20, 30, 40}) {
      out["single-pattern-" + std::to_string(pct) + "pct" + suffix] =
          with_attack(attack::AttackKind::kModelPoisoning, pct / 100.0, d);
    }
    ExperimentConfig co = with_attack(attack::AttackKind::kModelPoisoning, 0.2, d);
    co.attack.plan.collusion = attack::Collusion::kCoordinated;
    out["coordinated-20pct" + suffix] = co;
    out["data-poisoning" + suffix] = with_attack(attack::AttackKind::kDataPoisoning, 0.2, d);
  }

  ExperimentConfig ref = eminspector_20pct();
  ref.attack.plan.reference_mode = attack::ReferenceMode::kPerClient;
  out["adaptive-reference"] = ref;

  ExperimentConfig clean = eminspector_20pct();
  clean.attack.plan.clean_model_mode = attack::CleanModelMode::kPerClientFinetuned;
  out["adaptive-clean-model"] = clean;

  ExperimentConfig rv = eminspector_20pct();
  rv.defense.inspection_source = data::InspectionSource::kRandomVectors;
  out["random-vector-inspection"] = rv;

  ExperimentConfig ka = eminspector_20pct();
  ka.defense.estimated_malicious_fraction = 0.1;
  ka.defense.fluctuation = 0.2;
  out["knowledge-adjusted"] = ka;

  out["no-attack-baseline"] = out.at("no-attack-fedavg");
  for (auto& [name, c] : out) c.output_dir = std::filesystem::path("out") / name;
  return out;
}

const std::map<std::string, ExperimentConfig>& registry() {
  static const std::map<std::string, ExperimentConfig> all = build_all();
  return all;
}

}  // namespace

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.federation.rounds = 45;
  c.attack.plan.start_round = 15;
  c.attack.plan.attack_rounds = 30;
  return c;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, c] : registry()) names.push_back(name);
  return names;
}

ExperimentConfig make_preset(const std::string& name) {
  const auto& all = registry();
  auto it = all.find(name);
  if (it == all.end()) throw ConfigError("unknown preset '" + name + "'");
  return it->second;
}

}  // namespace fssl::cli
