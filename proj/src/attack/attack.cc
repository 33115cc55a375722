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

#include "fssl/attack/attack.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"

namespace fssl::attack {

using core::ParameterVector;
using core::Tensor;

namespace {

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
             const char* what) {
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace

std::string to_string(AttackKind v) {
  switch (v) {
    case AttackKind::kNone: return "none";
    case AttackKind::kModelPoisoning: return "model_poisoning";
    case AttackKind::kDataPoisoning: return "data_poisoning";
  }
  return "?";
}
std::string to_string(Collusion v) {
  return v == Collusion::kSingle ? "single" : "coordinated";
}
std::string to_string(ReferenceMode v) {
  return v == ReferenceMode::kShared ? "shared" : "per_client";
}
std::string to_string(CleanModelMode v) {
  return v == CleanModelMode::kSharedInitial ? "shared_initial" : "per_client_finetuned";
}
std::string to_string(AnchorMode v) {
  return v == AnchorMode::kInitial ? "initial" : "previous_round";
}

AttackKind parse_attack_kind(const std::string& s) {
  return parse_enum<AttackKind>(s,
                                {{"none", AttackKind::kNone},
                                 {"model_poisoning", AttackKind::kModelPoisoning},
                                 {"data_poisoning", AttackKind::kDataPoisoning}},
                                "attack kind");
}
Collusion parse_collusion(const std::string& s) {
  return parse_enum<Collusion>(
      s, {{"single", Collusion::kSingle}, {"coordinated", Collusion::kCoordinated}},
      "collusion");
}
ReferenceMode parse_reference_mode(const std::string& s) {
  return parse_enum<ReferenceMode>(
      s, {{"shared", ReferenceMode::kShared}, {"per_client", ReferenceMode::kPerClient}},
      "reference mode");
}
CleanModelMode parse_clean_model_mode(const std::string& s) {
  return parse_enum<CleanModelMode>(
      s,
      {{"shared_initial", CleanModelMode::kSharedInitial},
       {"per_client_finetuned", CleanModelMode::kPerClientFinetuned}},
      "clean model mode");
}
AnchorMode parse_anchor_mode(const std::string& s) {
  return parse_enum<AnchorMode>(
      s, {{"initial", AnchorMode::kInitial}, {"previous_round", AnchorMode::kPreviousRound}},
      "anchor mode");
}

void AttackPlan::validate(std::size_t n_clients, std::size_t local_epochs) const {
  if (kind == AttackKind::kNone) return;
  for (std::size_t id : malicious_ids) {
    if (id >= n_clients) {
      throw ConfigError("attack.malicious_ids contains " + std::to_string(id) +
                        ", outside [0, n_clients)");
    }
  }
  if (!allow_majority && 2 * malicious_ids.size() >= n_clients) {
    throw ConfigError("malicious clients must be a minority (M < N/2); set "
                      "attack.allow_majority to override");
  }
  if (lambda1 < 0.0 || lambda2 < 0.0 || (lambda1 == 0.0 && lambda2 == 0.0)) {
    throw ConfigError("attack.lambda1/lambda2 must be >= 0 and not both zero");
  }
  if (eta > local_epochs) throw ConfigError("attack.eta must not exceed local_epochs");
  if (plateau_window == 0) throw ConfigError("attack.plateau_window must be >= 1");
  if (kind == AttackKind::kDataPoisoning && !(poison_fraction > 0.0 && poison_fraction <= 1.0)) {
    throw ConfigError("attack.poison_fraction must lie in (0, 1]");
  }
  optimizer.validate();
}

std::map<std::size_t, data::GlobalTrigger> assign_triggers(const AttackPlan& plan,
                                                           const data::GlobalTrigger& global) {
  if (global.locals.empty()) throw ConfigError("trigger has no patterns");
  std::map<std::size_t, data::GlobalTrigger> out;
  std::size_t k = 0;
  for (std::size_t id : plan.malicious_ids) {
    if (plan.collusion == Collusion::kSingle) {
      out[id] = global;
    } else {
      out[id] = data::GlobalTrigger{{global.locals[k++ % global.locals.size()]}};
    }
  }
  return out;
}

std::map<std::size_t, std::size_t> choose_references(const AttackPlan& plan,
                                                     const data::Dataset& pool,
                                                     std::uint64_t seed) {
  std::vector<std::size_t> targets = pool.indices_of(plan.target_class);
  if (targets.empty()) {
    throw ConfigError("target class " + std::to_string(plan.target_class) +
                      " has no reference images");
  }
  std::map<std::size_t, std::size_t> out;
  if (plan.reference_mode == ReferenceMode::kShared) {
    // The most typical target image: nearest to the class mean in pixel space.
    const std::size_t width = pool.images.row_size();
    std::vector<double> mean(width, 0.0);
    for (std::size_t t : targets) {
      const auto r = pool.images.row(t);
      for (std::size_t c = 0; c < width; ++c) mean[c] += r[c];
    }
    for (double& v : mean) v /= static_cast<double>(targets.size());
    std::size_t best = targets.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t t : targets) {
      const auto r = pool.images.row(t);
      double d = 0.0;
      for (std::size_t c = 0; c < width; ++c) d += (r[c] - mean[c]) * (r[c] - mean[c]);
      if (d < best_d) {
        best_d = d;
        best = t;
      }
    }
    for (std::size_t id : plan.malicious_ids) out[id] = best;
    return out;
  }
  if (targets.size() < plan.malicious_ids.size()) {
    throw ConfigError("not enough target-class images for distinct references");
  }
  Rng rng(derive_seed(seed, Stream::kMalicious, {0x5EF}));
  std::shuffle(targets.begin(), targets.end(), rng);
  std::size_t k = 0;
  for (std::size_t id : plan.malicious_ids) out[id] = targets[k++];
  return out;
}

ParameterVector local_train_malicious(const core::EncoderSpec& spec, const ParameterVector& global,
                                      const MaliciousClientState& state,
                                      const data::Dataset& client_ds, const AttackPlan& plan,
                                      const protocol::FederationConfig& fed, std::uint64_t seed) {
  ParameterVector params = global;
  Rng rng(seed);
  core::Optimizer benign(fed.optimizer);
  protocol::contrastive_epochs(spec, params, client_ds.images, fed, plan.eta, benign, rng);
  if (plan.eta >= fed.local_epochs) return params;

  core::Optimizer attack(plan.optimizer, plan.bn_frozen);
  const core::BackdoorWeights weights{plan.lambda1, plan.lambda2, plan.criterion};
  const std::size_t n = client_ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = plan.eta; e < fed.local_epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += fed.batch_size) {
      const std::size_t count = std::min(fed.batch_size, n - start);
      const Tensor clean = client_ds.images.gather_rows(std::span(order).subspan(start, count));
      const Tensor triggered = data::embed_trigger(clean, state.trigger);
      const Tensor clean_anchor =
          core::forward(spec, state.clean_anchor, clean, core::BnMode::kRunningStatistics);
      core::BackdoorBatch batch{&clean, &triggered, &state.reference, &clean_anchor,
                                state.reference_embedding};
      core::BackdoorLoss loss = core::backdoor_loss(spec, params, batch, weights, plan.bn_frozen);
      if (!plan.bn_frozen) core::update_running_statistics(spec, params, loss.trace);
      attack.step(params, loss.gradient);
    }
  }
  return params;
}

ParameterVector data_poisoning_round(const core::EncoderSpec& spec, const ParameterVector& global,
                                     const data::Dataset& poisoned_ds,
                                     const protocol::FederationConfig& fed, std::uint64_t seed) {
  return protocol::local_train_benign(spec, global, poisoned_ds, fed, seed);
}

bool plateau_reached(const std::vector<double>& h, std::size_t round, std::size_t window,
                     double threshold) {
  if (round < window || round >= h.size()) return false;
  return h[round] - h[round - window] < threshold;
}

Attacker::Attacker(AttackPlan plan, std::shared_ptr<const core::EncoderSpec> spec,
                   data::GlobalTrigger global_trigger, const data::Dataset& reference_pool,
                   protocol::FederationConfig fed, std::uint64_t seed)
    : plan_(std::move(plan)),
      spec_(std::move(spec)),
      global_trigger_(std::move(global_trigger)),
      fed_(std::move(fed)),
      seed_(seed) {
  if (!plan_.enabled()) return;
  const auto triggers = assign_triggers(plan_, global_trigger_);
  const auto refs = plan_.kind == AttackKind::kModelPoisoning
                        ? choose_references(plan_, reference_pool, seed_)
                        : std::map<std::size_t, std::size_t>{};
  for (std::size_t id : plan_.malicious_ids) {
    MaliciousClientState s;
    s.client_id = id;
    s.trigger = plan_.kind == AttackKind::kModelPoisoning ? triggers.at(id) : global_trigger_;
    if (auto it = refs.find(id); it != refs.end()) {
      s.reference_index = it->second;
      s.reference = reference_pool.images.gather_rows(std::span(&it->second, 1));
    }
    states_.emplace(id, std::move(s));
  }
}

void Attacker::refresh_anchor(MaliciousClientState& s, const ParameterVector& clean,
                              const data::Dataset* own_data) {
  s.clean_anchor = clean;
  if (plan_.clean_model_mode == CleanModelMode::kPerClientFinetuned && own_data) {
    core::Optimizer opt(fed_.optimizer);
    Rng rng(derive_seed(seed_, Stream::kMalicious, {s.client_id, 0xF17E}));
    protocol::contrastive_epochs(*spec_, s.clean_anchor, own_data->images, fed_,
                                 plan_.finetune_epochs, opt, rng);
  }
  if (s.reference.empty()) return;
  const Tensor emb = core::forward(*spec_, s.clean_anchor, s.reference,
                                   core::BnMode::kRunningStatistics);
  s.reference_embedding.assign(emb.values().begin(), emb.values().end());
}

void Attacker::begin_round(std::size_t round, const ParameterVector& global,
                           const std::vector<double>& acc_history,
                           const std::map<std::size_t, data::Dataset>& malicious_data) {
  if (!plan_.enabled()) return;
  if (!active_) {
    const bool go = plan_.start_round
                        ? round >= *plan_.start_round
                        : plateau_reached(acc_history, round, plan_.plateau_window,
                                          plan_.plateau_threshold);
    if (!go) return;
    active_ = true;
    started_at_ = round;
  } else if (plan_.anchor_mode == AnchorMode::kInitial) {
    return;
  }
  if (plan_.kind != AttackKind::kModelPoisoning) return;
  for (auto& [id, s] : states_) {
    auto it = malicious_data.find(id);
    refresh_anchor(s, global, it == malicious_data.end() ? nullptr : &it->second);
  }
}

ParameterVector Attacker::train(std::size_t client, const ParameterVector& global,
                                const data::Dataset& client_ds, std::uint64_t seed) const {
  if (!active_ || !is_malicious(client)) {
    return protocol::local_train_benign(*spec_, global, client_ds, fed_, seed);
  }
  if (plan_.kind == AttackKind::kDataPoisoning) {
    return data_poisoning_round(*spec_, global, poisoned(client, client_ds), fed_, seed);
  }
  return local_train_malicious(*spec_, global, states_.at(client), client_ds, plan_, fed_, seed);
}

data::Dataset Attacker::poisoned(std::size_t client, const data::Dataset& client_ds) const {
  return data::poison_dataset_labels_free(client_ds, plan_.target_class, global_trigger_,
                                          plan_.poison_fraction,
                                          derive_seed(seed_, Stream::kMalicious, {client}));
}

}  // namespace fssl::attack
