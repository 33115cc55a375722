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

#include "fssl/cli/config.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"

namespace fssl::cli {

using nlohmann::json;

namespace {

// Reads keys of one object while rejecting unknown ones.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }
  ~Section() = default;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string path(const char* key) const { return path_ + "." + key; }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown key " + path_ + "." + k);
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_optimizer(const json& j, const std::string& path, core::OptimizerConfig& o) {
  Section s(j, path);
  std::string kind = core::to_string(o.kind);
  s.get("kind", kind);
  o.kind = core::parse_optimizer_kind(kind);
  s.get("learning_rate", o.learning_rate);
  s.get("beta1", o.beta1);
  s.get("beta2", o.beta2);
  s.get("epsilon", o.epsilon);
  s.get("momentum", o.momentum);
  s.finish();
}

json optimizer_json(const core::OptimizerConfig& o) {
  return {{"kind", core::to_string(o.kind)},
          {"learning_rate", o.learning_rate},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon},
          {"momentum", o.momentum}};
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Section root(j, "config");
  root.get("seed", c.seed);
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = out;
  root.get("threads", c.threads);

  if (root.has("data")) {
    Section s(root.at("data"), "data");
    auto& syn = c.data.synthesis;
    s.get("classes", syn.classes);
    s.get("per_class", syn.per_class);
    s.get("height", syn.height);
    s.get("width", syn.width);
    s.get("channels", syn.channels);
    s.get("noise", syn.noise);
    s.get("max_shift", syn.max_shift);
    s.get("contrast_jitter", syn.contrast_jitter);
    s.get("family", syn.family);
    if (s.has("raw_path")) {
      std::string p;
      s.get("raw_path", p);
      c.data.raw_path = p;
    }
    std::string mode = data::to_string(c.data.partition);
    s.get("partition", mode);
    c.data.partition = data::parse_partition_mode(mode);
    s.get("classes_per_client", c.data.classes_per_client);
    s.get("disjoint", c.data.disjoint);
    s.get("probe_fraction", c.data.probe_fraction);
    s.finish();
  }
  if (root.has("model")) {
    Section s(root.at("model"), "model");
    s.get("architecture", c.model.architecture);
    s.get("embedding_dim", c.model.embedding_dim);
    s.get("hidden", c.model.hidden);
    s.finish();
  }
  if (root.has("federation")) {
    Section s(root.at("federation"), "federation");
    auto& f = c.federation;
    s.get("n_clients", f.n_clients);
    s.get("clients_per_round", f.clients_per_round);
    s.get("local_epochs", f.local_epochs);
    s.get("rounds", f.rounds);
    s.get("per_client_size", f.per_client_size);
    s.get("batch_size", f.batch_size);
    s.get("temperature", f.temperature);
    if (s.has("optimizer")) read_optimizer(s.at("optimizer"), s.path("optimizer"), f.optimizer);
    if (s.has("augment")) {
      Section a(s.at("augment"), s.path("augment"));
      a.get("max_shift", f.augment.max_shift);
      a.get("flip", f.augment.flip);
      a.get("brightness", f.augment.brightness);
      a.get("noise", f.augment.noise);
      a.finish();
    }
    s.finish();
  }
  if (root.has("attack")) {
    Section s(root.at("attack"), "attack");
    auto& p = c.attack.plan;
    std::string kind = attack::to_string(p.kind);
    s.get("kind", kind);
    p.kind = attack::parse_attack_kind(kind);
    if (s.has("malicious_ids")) {
      std::vector<std::size_t> ids;
      s.get("malicious_ids", ids);
      p.malicious_ids = {ids.begin(), ids.end()};
    }
    if (s.has("malicious_fraction")) {
      double f = 0.0;
      s.get("malicious_fraction", f);
      c.attack.malicious_fraction = f;
    }
    std::string collusion = attack::to_string(p.collusion);
    s.get("collusion", collusion);
    p.collusion = attack::parse_collusion(collusion);
    s.get("lambda1", p.lambda1);
    s.get("lambda2", p.lambda2);
    if (s.has("start_round")) {
      const json& v = s.at("start_round");
      if (v.is_string() && v.get<std::string>() == "auto") {
        p.start_round.reset();
      } else if (v.is_number_unsigned()) {
        p.start_round = v.get<std::size_t>();
      } else {
        throw ConfigError("attack.start_round must be \"auto\" or a round index");
      }
    }
    s.get("plateau_window", p.plateau_window);
    s.get("plateau_threshold", p.plateau_threshold);
    s.get("attack_rounds", p.attack_rounds);
    if (s.has("optimizer")) read_optimizer(s.at("optimizer"), s.path("optimizer"), p.optimizer);
    s.get("eta", p.eta);
    s.get("bn_frozen", p.bn_frozen);
    s.get("target_class", p.target_class);
    std::string crit = core::to_string(p.criterion);
    s.get("criterion", crit);
    p.criterion = core::parse_criterion(crit);
    std::string ref = attack::to_string(p.reference_mode);
    s.get("reference_mode", ref);
    p.reference_mode = attack::parse_reference_mode(ref);
    std::string clean = attack::to_string(p.clean_model_mode);
    s.get("clean_model_mode", clean);
    p.clean_model_mode = attack::parse_clean_model_mode(clean);
    std::string anchor = attack::to_string(p.anchor_mode);
    s.get("anchor_mode", anchor);
    p.anchor_mode = attack::parse_anchor_mode(anchor);
    s.get("finetune_epochs", p.finetune_epochs);
    s.get("poison_fraction", p.poison_fraction);
    s.get("allow_majority", p.allow_majority);
    s.finish();
  }
  if (root.has("trigger")) {
    Section s(root.at("trigger"), "trigger");
    s.get("layout", c.trigger.layout);
    s.get("size", c.trigger.size);
    s.get("value", c.trigger.value);
    if (s.has("patches")) {
      const json& arr = s.at("patches");
      if (!arr.is_array()) throw ConfigError("trigger.patches must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section p(arr[i], "trigger.patches[" + std::to_string(i) + "]");
        PatchSpec ps;
        p.get("row", ps.row);
        p.get("col", ps.col);
        p.get("height", ps.height);
        p.get("width", ps.width);
        p.get("value", ps.value);
        p.finish();
        c.trigger.patches.push_back(ps);
      }
    }
    s.finish();
  }
  if (root.has("defense")) {
    Section s(root.at("defense"), "defense");
    auto& d = c.defense;
    std::string kind = defense::to_string(d.kind);
    s.get("kind", kind);
    d.kind = defense::parse_defense_kind(kind);
    std::string boundary = defense::to_string(d.boundary);
    s.get("boundary", boundary);
    d.boundary = defense::parse_boundary_rule(boundary);
    if (s.has("estimated_malicious_fraction")) {
      double f = 0.0;
      s.get("estimated_malicious_fraction", f);
      d.estimated_malicious_fraction = f;
    }
    s.get("fluctuation", d.fluctuation);
    std::string source = data::to_string(d.inspection_source);
    s.get("inspection_source", source);
    d.inspection_source = data::parse_inspection_source(source);
    s.get("inspection_size", d.inspection_size);
    s.get("krum_c", d.krum_c);
    s.get("trim_k", d.trim_k);
    s.get("root_size", d.root_size);
    s.get("flame_noise", d.flame_noise);
    s.get("flare_neighbors", d.flare_neighbors);
    s.finish();
  }
  if (root.has("eval")) {
    Section s(root.at("eval"), "eval");
    s.get("knn_k", c.eval.knn_k);
    s.get("knn_temperature", c.eval.knn_temperature);
    s.get("gap_per_class", c.eval.gap_per_class);
    s.get("score_tables", c.eval.score_tables);
    s.get("export_projection", c.eval.export_projection);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void apply_environment(ExperimentConfig& c) {
  if (const char* seed = std::getenv("FSSL_SEED"); seed && *seed) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(seed, &end, 10);
    if (*end != '\0') throw ConfigError("FSSL_SEED must be an unsigned integer");
    c.seed = v;
  }
  if (const char* dir = std::getenv("FSSL_OUTPUT_DIR"); dir && *dir) c.output_dir = dir;
}

std::set<std::size_t> ExperimentConfig::malicious_ids() const {
  if (!attack.malicious_fraction) return attack.plan.malicious_ids;
  const auto m = static_cast<std::size_t>(
      std::lround(*attack.malicious_fraction * static_cast<double>(federation.n_clients)));
  std::vector<std::size_t> ids(federation.n_clients);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(derive_seed(seed, Stream::kMalicious));
  std::shuffle(ids.begin(), ids.end(), rng);
  return {ids.begin(), ids.begin() + static_cast<long>(std::min(m, ids.size()))};
}

void ExperimentConfig::validate() const {
  federation.validate();
  defense.validate();
  if (threads == 0) throw ConfigError("threads must be >= 1");
  if (!(data.probe_fraction > 0.0 && data.probe_fraction < 1.0)) {
    throw ConfigError("data.probe_fraction must lie in (0, 1)");
  }
  if (!data.raw_path) {
    if (data.synthesis.classes < 2) throw ConfigError("data.classes must be >= 2");
    if (data.synthesis.per_class < 1) throw ConfigError("data.per_class must be >= 1");
  }
  if (model.architecture != "desk_default" && model.architecture != "mlp") {
    throw ConfigError("model.architecture must be desk_default or mlp");
  }
  if (model.embedding_dim == 0) throw ConfigError("model.embedding_dim must be >= 1");
  if (eval.knn_k == 0) throw ConfigError("eval.knn_k must be >= 1");
  if (!(eval.knn_temperature > 0.0)) throw ConfigError("eval.knn_temperature must be > 0");
  if (attack.plan.kind != attack::AttackKind::kNone) {
    if (attack.malicious_fraction && !attack.plan.malicious_ids.empty()) {
      throw ConfigError("give attack.malicious_ids or attack.malicious_fraction, not both");
    }
    if (attack.malicious_fraction &&
        !(*attack.malicious_fraction >= 0.0 && *attack.malicious_fraction <= 1.0)) {
      throw ConfigError("attack.malicious_fraction must lie in [0, 1]");
    }
    attack::AttackPlan plan = attack.plan;
    plan.malicious_ids = malicious_ids();
    plan.validate(federation.n_clients, federation.local_epochs);
    if (!data.raw_path && (attack.plan.target_class < 0 ||
                           static_cast<std::size_t>(attack.plan.target_class) >=
                               data.synthesis.classes)) {
      throw ConfigError("attack.target_class " + std::to_string(attack.plan.target_class) +
                        " does not exist");
    }
  }
  if (trigger.layout != "auto" && trigger.layout != "square" &&
      trigger.layout != "quad_corners" && trigger.layout != "custom") {
    throw ConfigError("trigger.layout must be auto, square, quad_corners or custom");
  }
  if (trigger.layout == "custom" && trigger.patches.empty()) {
    throw ConfigError("trigger.layout custom needs trigger.patches");
  }
  if (defense.kind == defense::DefenseKind::kKrum &&
      federation.clients_per_round < defense.krum_c + 3) {
    throw ConfigError("krum needs clients_per_round >= krum_c + 3");
  }
  if (defense.kind == defense::DefenseKind::kTrimmedMean &&
      2 * defense.trim_k >= federation.clients_per_round) {
    throw ConfigError("trimmed_mean needs clients_per_round > 2 * trim_k");
  }
  if (defense.kind == defense::DefenseKind::kRflbat && federation.clients_per_round < 4) {
    throw ConfigError("rflbat needs clients_per_round >= 4");
  }
  if (defense.kind == defense::DefenseKind::kFlame && federation.clients_per_round < 3) {
    throw ConfigError("flame needs clients_per_round >= 3");
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["threads"] = c.threads;
  const auto& syn = c.data.synthesis;
  j["data"] = {{"classes", syn.classes},
               {"per_class", syn.per_class},
               {"height", syn.height},
               {"width", syn.width},
               {"channels", syn.channels},
               {"noise", syn.noise},
               {"max_shift", syn.max_shift},
               {"contrast_jitter", syn.contrast_jitter},
               {"family", syn.family},
               {"partition", data::to_string(c.data.partition)},
               {"classes_per_client", c.data.classes_per_client},
               {"disjoint", c.data.disjoint},
               {"probe_fraction", c.data.probe_fraction}};
  if (c.data.raw_path) j["data"]["raw_path"] = c.data.raw_path->string();
  j["model"] = {{"architecture", c.model.architecture},
                {"embedding_dim", c.model.embedding_dim},
                {"hidden", c.model.hidden}};
  const auto& f = c.federation;
  j["federation"] = {{"n_clients", f.n_clients},
                     {"clients_per_round", f.clients_per_round},
                     {"local_epochs", f.local_epochs},
                     {"rounds", f.rounds},
                     {"per_client_size", f.per_client_size},
                     {"batch_size", f.batch_size},
                     {"temperature", f.temperature},
                     {"optimizer", optimizer_json(f.optimizer)},
                     {"augment",
                      {{"max_shift", f.augment.max_shift},
                       {"flip", f.augment.flip},
                       {"brightness", f.augment.brightness},
                       {"noise", f.augment.noise}}}};
  const auto& p = c.attack.plan;
  json a = {{"kind", attack::to_string(p.kind)},
            {"collusion", attack::to_string(p.collusion)},
            {"lambda1", p.lambda1},
            {"lambda2", p.lambda2},
            {"plateau_window", p.plateau_window},
            {"plateau_threshold", p.plateau_threshold},
            {"attack_rounds", p.attack_rounds},
            {"optimizer", optimizer_json(p.optimizer)},
            {"eta", p.eta},
            {"bn_frozen", p.bn_frozen},
            {"target_class", p.target_class},
            {"criterion", core::to_string(p.criterion)},
            {"reference_mode", attack::to_string(p.reference_mode)},
            {"clean_model_mode", attack::to_string(p.clean_model_mode)},
            {"anchor_mode", attack::to_string(p.anchor_mode)},
            {"finetune_epochs", p.finetune_epochs},
            {"poison_fraction", p.poison_fraction},
            {"allow_majority", p.allow_majority}};
  if (p.start_round) {
    a["start_round"] = *p.start_round;
  } else {
    a["start_round"] = "auto";
  }
  if (c.attack.malicious_fraction) {
    a["malicious_fraction"] = *c.attack.malicious_fraction;
  } else {
    a["malicious_ids"] = std::vector<std::size_t>(p.malicious_ids.begin(), p.malicious_ids.end());
  }
  j["attack"] = a;
  json t = {{"layout", c.trigger.layout}, {"size", c.trigger.size}, {"value", c.trigger.value}};
  if (!c.trigger.patches.empty()) {
    t["patches"] = json::array();
    for (const auto& ps : c.trigger.patches) {
      t["patches"].push_back({{"row", ps.row},
                              {"col", ps.col},
                              {"height", ps.height},
                              {"width", ps.width},
                              {"value", ps.value}});
    }
  }
  j["trigger"] = t;
  const auto& d = c.defense;
  j["defense"] = {{"kind", defense::to_string(d.kind)},
                  {"boundary", defense::to_string(d.boundary)},
                  {"fluctuation", d.fluctuation},
                  {"inspection_source", data::to_string(d.inspection_source)},
                  {"inspection_size", d.inspection_size},
                  {"krum_c", d.krum_c},
                  {"trim_k", d.trim_k},
                  {"root_size", d.root_size},
                  {"flame_noise", d.flame_noise},
                  {"flare_neighbors", d.flare_neighbors}};
  if (d.estimated_malicious_fraction) {
    j["defense"]["estimated_malicious_fraction"] = *d.estimated_malicious_fraction;
  }
  j["eval"] = {{"knn_k", c.eval.knn_k},
               {"knn_temperature", c.eval.knn_temperature},
               {"gap_per_class", c.eval.gap_per_class},
               {"score_tables", c.eval.score_tables},
               {"export_projection", c.eval.export_projection}};
  return j;
}

}  // namespace fssl::cli
