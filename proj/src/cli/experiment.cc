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

#include "fssl/cli/experiment.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"
#include "fssl/data/partition.h"

namespace fssl::cli {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

data::GlobalTrigger make_trigger(const ExperimentConfig& c, const core::Shape3& shape) {
  std::string layout = c.trigger.layout;
  if (layout == "auto") {
    const bool coordinated = c.attack.plan.kind == attack::AttackKind::kModelPoisoning &&
                             c.attack.plan.collusion == attack::Collusion::kCoordinated;
    layout = coordinated ? "quad_corners" : "square";
  }
  if (layout == "square") {
    return data::square_trigger(shape, c.trigger.size ? c.trigger.size : 3, c.trigger.value);
  }
  if (layout == "quad_corners") {
    return data::quad_corner_triggers(shape, c.trigger.size ? c.trigger.size : 2,
                                      c.trigger.value);
  }
  data::GlobalTrigger t;
  for (std::size_t i = 0; i < c.trigger.patches.size(); ++i) {
    const auto& p = c.trigger.patches[i];
    t.locals.push_back(data::solid_patch(p.height, p.width, shape.channels, p.row, p.col,
                                         p.value, "patch-" + std::to_string(i)));
    if (!t.locals.back().fits(shape)) {
      throw ConfigError("trigger.patches[" + std::to_string(i) + "] does not fit the image");
    }
  }
  if (!t.disjoint()) throw ConfigError("trigger.patches overlap");
  return t;
}

data::Dataset take_per_class(const data::Dataset& ds, std::size_t per_class) {
  std::vector<int> labels(ds.labels);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<std::size_t> idx;
  for (int l : labels) {
    auto members = ds.indices_of(l);
    members.resize(std::min(per_class, members.size()));
    idx.insert(idx.end(), members.begin(), members.end());
  }
  std::sort(idx.begin(), idx.end());
  return ds.subset(idx);
}

}  // namespace

ExperimentPlan build_plan(const ExperimentConfig& c) {
  c.validate();
  ExperimentPlan plan;
  data::Dataset full = c.data.raw_path ? data::read_raw_dataset(*c.data.raw_path)
                                       : data::synthesize_dataset(c.data.synthesis, c.seed);
  full.validate();
  if (!full.has_labels()) throw ConfigError("the dataset needs labels for the probe split");
  const core::Shape3 shape = full.image_shape();
  if (c.model.architecture == "desk_default") {
    if (shape.height != shape.width) throw ConfigError("desk_default expects square images");
    plan.spec = std::make_shared<const core::EncoderSpec>(
        core::EncoderSpec::desk_default(shape.channels, shape.height, c.model.embedding_dim));
  } else {
    plan.spec = std::make_shared<const core::EncoderSpec>(
        core::EncoderSpec::mlp(shape, c.model.hidden, c.model.embedding_dim));
  }

  eval::ProbeSplit split = eval::split_probe(full, c.data.probe_fraction, c.seed);
  plan.trigger = make_trigger(c, shape);
  plan.attack = c.attack.plan;
  plan.attack.malicious_ids = c.malicious_ids();
  if (plan.attack.kind != attack::AttackKind::kNone &&
      split.pool.indices_of(plan.attack.target_class).empty()) {
    throw ConfigError("target class " + std::to_string(plan.attack.target_class) +
                      " is absent from the training pool");
  }

  data::PartitionConfig pc;
  pc.clients = c.federation.n_clients;
  pc.per_client = c.federation.per_client_size;
  pc.mode = c.data.partition;
  pc.classes_per_client = c.data.classes_per_client;
  pc.disjoint = c.data.disjoint;
  if (plan.attack.kind == attack::AttackKind::kDataPoisoning &&
      pc.mode == data::PartitionMode::kNonIid) {
    for (std::size_t id : plan.attack.malicious_ids) pc.pinned_classes[id] = plan.attack.target_class;
  }
  const data::Partition part = data::partition(split.pool, pc, c.seed);
  plan.pool = split.pool;

  plan.setup.spec = plan.spec;
  plan.setup.initial = core::initialize_parameters(*plan.spec, derive_seed(c.seed, Stream::kInit));
  plan.setup.federation = c.federation;
  plan.setup.seed = c.seed;
  for (const auto& a : part.assignments) plan.setup.client_data.push_back(split.pool.subset(a));

  plan.eval.memory = split.memory;
  plan.eval.test = split.test;
  plan.eval.knn_k = c.eval.knn_k;
  plan.eval.knn_temperature = c.eval.knn_temperature;
  plan.eval.target_class = plan.attack.target_class;
  plan.eval.trigger = plan.trigger;

  data::Dataset probe_all = split.memory;
  const core::Tensor* parts[] = {&split.memory.images, &split.test.images};
  probe_all.images = core::concat_rows(parts);
  probe_all.labels.insert(probe_all.labels.end(), split.test.labels.begin(),
                          split.test.labels.end());
  plan.gap_set = take_per_class(probe_all, c.eval.gap_per_class);

  const auto& d = c.defense;
  if (d.kind == defense::DefenseKind::kEmInspector || d.kind == defense::DefenseKind::kFlare) {
    plan.inspection = data::build_inspection_set(d.inspection_source, d.inspection_size,
                                                 split.pool, c.data.synthesis, c.seed);
  }
  if (d.kind == defense::DefenseKind::kFlTrust) {
    if (split.pool.size() < d.root_size) throw ConfigError("pool smaller than defense.root_size");
    std::vector<std::size_t> idx(split.pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(c.seed, Stream::kServer));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(d.root_size);
    std::sort(idx.begin(), idx.end());
    plan.root = split.pool.subset(idx);
  }
  return plan;
}

std::string csv_header() { return "round,acc,asr,fpr,tpr,b_ms,m_ms,flagged_ids\n"; }

std::string csv_row(const protocol::RoundReport& r) {
  std::string flagged;
  for (std::size_t id : r.flagged) {
    if (!flagged.empty()) flagged += ';';
    flagged += std::to_string(id);
  }
  std::ostringstream os;
  os << r.round << ',' << fmt(r.acc) << ',' << fmt(r.asr) << ',' << fmt(r.detection.fpr) << ','
     << fmt(r.detection.tpr) << ',' << fmt(r.detection.benign_mean_score) << ','
     << fmt(r.detection.malicious_mean_score) << ',' << flagged << '\n';
  return os.str();
}

json score_table_json(const protocol::RoundReport& r) {
  json j;
  j["round"] = r.round;
  j["selected"] = r.selected;
  j["flagged"] = std::vector<std::size_t>(r.flagged.begin(), r.flagged.end());
  j["kept_previous"] = r.kept_previous;
  if (!r.note.empty()) j["note"] = r.note;
  if (r.table) {
    json scores = json::object();
    for (const auto& [id, s] : r.table->scores) scores[std::to_string(id)] = s;
    j["scores"] = scores;
    j["item_flags"] = r.table->item_flags;
  }
  return j;
}

ExperimentResult run_experiment(const ExperimentConfig& c, const RunOptions& options) {
  ExperimentPlan plan = build_plan(c);
  defense::DefenseResources res{plan.inspection, plan.root, c.federation};
  std::unique_ptr<defense::Defense> def = defense::make_defense(c.defense, std::move(res));
  std::unique_ptr<attack::Attacker> attacker;
  if (plan.attack.enabled()) {
    attacker = std::make_unique<attack::Attacker>(plan.attack, plan.spec, plan.trigger,
                                                  plan.pool, c.federation, c.seed);
  }

  std::ofstream csv;
  json tables = json::array();
  std::ofstream projection;
  if (options.write_outputs) {
    std::filesystem::create_directories(c.output_dir);
    csv.open(c.output_dir / "metrics.csv", std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + (c.output_dir / "metrics.csv").string());
    csv << csv_header() << std::flush;
    if (c.eval.export_projection) {
      projection.open(c.output_dir / "projection.txt", std::ios::trunc);
      projection << "round x y tag client_id\n";
    }
  }
  protocol::RunHooks hooks;
  hooks.threads = c.threads;
  hooks.on_round = [&](const protocol::RoundReport& r) {
    if (!options.write_outputs) return;
    const std::string row = csv_row(r);
    csv.write(row.data(), static_cast<std::streamsize>(row.size()));
    csv.flush();
    if (c.eval.score_tables) tables.push_back(score_table_json(r));
  };
  if (options.write_outputs && c.eval.export_projection) {
    hooks.on_uploads = [&](std::size_t round, const core::ParameterVector& global,
                           const std::vector<protocol::ClientUpdate>& updates) {
      std::vector<core::EncoderState> states;
      states.reserve(updates.size() + 1);
      std::vector<eval::ProjectionInput> inputs;
      for (const auto& u : updates) states.push_back({plan.spec, u.upload().params, false});
      states.push_back({plan.spec, global, false});
      for (std::size_t i = 0; i < updates.size(); ++i) {
        inputs.push_back({&states[i], updates[i].is_malicious_truth() ? "malicious" : "benign",
                          static_cast<long>(updates[i].upload().client_id)});
      }
      inputs.push_back({&states.back(), "global", -1});
      if (inputs.size() < 3) return;
      const std::size_t first = 0;
      const core::Tensor input = plan.eval.test.images.gather_rows(std::span(&first, 1));
      for (const auto& p : eval::export_embedding_projection(inputs, input)) {
        projection << round << ' ' << fmt(p.x) << ' ' << fmt(p.y) << ' ' << p.tag << ' '
                   << p.client_id << '\n';
      }
    };
  }

  ExperimentResult out;
  out.run = protocol::run_federation(plan.setup, attacker.get(), *def, plan.eval, hooks);
  if (!options.keep_tables) {
    for (auto& r : out.run.reports) r.table.reset();
  }
  if (out.run.pre_attack_params) {
    const core::EncoderState clean{plan.spec, *out.run.pre_attack_params, false};
    const core::EncoderState last{plan.spec, out.run.final_params, false};
    out.gap_vs_attack_start =
        eval::gap_relative_error(clean, last, plan.gap_set, plan.attack.target_class);
  }

  json s;
  s["seed"] = c.seed;
  s["defense"] = defense::to_string(c.defense.kind);
  s["attack"] = attack::to_string(plan.attack.kind);
  s["malicious_ids"] =
      std::vector<std::size_t>(plan.attack.malicious_ids.begin(), plan.attack.malicious_ids.end());
  s["initial_acc"] = out.run.initial_acc;
  s["initial_asr"] = out.run.initial_asr;
  s["rounds_run"] = out.run.reports.size();
  s["attack_start"] = out.run.attack_start ? json(*out.run.attack_start) : json(nullptr);
  if (!out.run.reports.empty()) {
    s["final_acc"] = out.run.reports.back().acc;
    s["final_asr"] = out.run.reports.back().asr;
  }
  double fpr = 0.0, tpr = 0.0;
  std::size_t nf = 0, nt = 0;
  for (const auto& r : out.run.reports) {
    if (r.detection.fpr) {
      fpr += *r.detection.fpr;
      ++nf;
    }
    if (r.detection.tpr) {
      tpr += *r.detection.tpr;
      ++nt;
    }
  }
  s["mean_fpr"] = nf ? json(fpr / static_cast<double>(nf)) : json(nullptr);
  s["mean_tpr"] = nt ? json(tpr / static_cast<double>(nt)) : json(nullptr);
  s["gap_relative_error_vs_attack_start"] = opt_json(out.gap_vs_attack_start);
  out.summary = s;

  if (options.write_outputs) {
    std::ofstream(c.output_dir / "summary.json") << s.dump(2) << '\n';
    if (c.eval.score_tables) std::ofstream(c.output_dir / "scores.json") << tables.dump(1) << '\n';
    std::ofstream(c.output_dir / "config.resolved.json") << to_json(c).dump(2) << '\n';
  }
  return out;
}

}  // namespace fssl::cli
