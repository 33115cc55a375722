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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fssl/core/encoder.h"
#include "fssl/core/losses.h"
#include "fssl/core/optimizer.h"
#include "fssl/core/parameter_vector.h"
#include "fssl/data/dataset.h"
#include "fssl/data/trigger.h"
#include "fssl/protocol/federation.h"

namespace fssl::attack {

enum class AttackKind : std::uint8_t { kNone, kModelPoisoning, kDataPoisoning };
enum class Collusion : std::uint8_t { kSingle, kCoordinated };
enum class ReferenceMode : std::uint8_t { kShared, kPerClient };
enum class CleanModelMode : std::uint8_t { kSharedInitial, kPerClientFinetuned };
// Which global model serves as the clean anchor: the snapshot taken when
// the attack starts, or the model broadcast in the current round.
enum class AnchorMode : std::uint8_t { kInitial, kPreviousRound };

std::string to_string(AttackKind v);
std::string to_string(Collusion v);
std::string to_string(ReferenceMode v);
std::string to_string(CleanModelMode v);
std::string to_string(AnchorMode v);
AttackKind parse_attack_kind(const std::string& s);
Collusion parse_collusion(const std::string& s);
ReferenceMode parse_reference_mode(const std::string& s);
CleanModelMode parse_clean_model_mode(const std::string& s);
AnchorMode parse_anchor_mode(const std::string& s);

struct AttackPlan {
  AttackKind kind = AttackKind::kNone;
  std::set<std::size_t> malicious_ids;
  Collusion collusion = Collusion::kSingle;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  // Empty: start at the first round whose ACC gain over the last
  // `plateau_window` rounds is below `plateau_threshold` points.
  std::optional<std::size_t> start_round;
  // Attacking rounds before the run stops; 0 runs to federation.rounds.
  std::size_t attack_rounds = 0;
  std::size_t plateau_window = 3;
  double plateau_threshold = 1.0;
  core::OptimizerConfig optimizer{core::OptimizerKind::kSgd, 0.05, 0.9, 0.999, 1e-8, 0.9};
  std::size_t eta = 1;  // clean epochs before the attack epochs
  bool bn_frozen = true;
  int target_class = 0;
  core::SimilarityCriterion criterion = core::SimilarityCriterion::kCosine;
  ReferenceMode reference_mode = ReferenceMode::kShared;
  CleanModelMode clean_model_mode = CleanModelMode::kSharedInitial;
  AnchorMode anchor_mode = AnchorMode::kInitial;
  std::size_t finetune_epochs = 1;  // per-client clean-model fine-tuning
  double poison_fraction = 1.0;     // data-poisoning only
  // Permits M >= N / 2 for stress runs.
  bool allow_majority = false;

  bool enabled() const { return kind != AttackKind::kNone && !malicious_ids.empty(); }
  // Throws ConfigError.
  void validate(std::size_t n_clients, std::size_t local_epochs) const;
};

struct MaliciousClientState {
  std::size_t client_id = 0;
  data::GlobalTrigger trigger;  // this client's e_i (the full pattern in single mode)
  core::Tensor reference;       // x_target, [1, H, W, C]
  std::size_t reference_index = 0;
  core::ParameterVector clean_anchor;
  std::vector<double> reference_embedding;  // f(x_target, clean_anchor)
};

// single: every malicious client receives the assembled pattern;
// coordinated: the sorted malicious ids receive the locals in order, cycling
// when there are more clients than locals. Throws ConfigError when the
// trigger has no locals.
std::map<std::size_t, data::GlobalTrigger> assign_triggers(const AttackPlan& plan,
                                                           const data::GlobalTrigger& global);

// Indices into `pool` of reference images: in shared mode the target-class
// image nearest the class mean in pixel space, otherwise distinct seeded
// target-class images per client.
std::map<std::size_t, std::size_t> choose_references(const AttackPlan& plan,
                                                     const data::Dataset& pool,
                                                     std::uint64_t seed);

// eta benign epochs with the benign optimizer, then tau - eta epochs of the
// backdoor objective with the attack optimizer on triggered copies of every
// local image. With eta == tau the result equals local_train_benign.
core::ParameterVector local_train_malicious(const core::EncoderSpec& spec,
                                            const core::ParameterVector& global,
                                            const MaliciousClientState& state,
                                            const data::Dataset& client_ds,
                                            const AttackPlan& plan,
                                            const protocol::FederationConfig& fed,
                                            std::uint64_t seed);

// Benign training on an already poisoned dataset.
core::ParameterVector data_poisoning_round(const core::EncoderSpec& spec,
                                           const core::ParameterVector& global,
                                           const data::Dataset& poisoned_ds,
                                           const protocol::FederationConfig& fed,
                                           std::uint64_t seed);

// Attack-late rule on the ACC history h (h[0] before round 0, h[t + 1]
// after round t): true when t >= window and h[t] - h[t - window] < threshold.
bool plateau_reached(const std::vector<double>& acc_history, std::size_t round,
                     std::size_t window, double threshold);

// Drives all malicious clients of one federation.
class Attacker {
 public:
  Attacker(AttackPlan plan, std::shared_ptr<const core::EncoderSpec> spec,
           data::GlobalTrigger global_trigger, const data::Dataset& reference_pool,
           protocol::FederationConfig fed, std::uint64_t seed);

  const AttackPlan& plan() const { return plan_; }
  bool is_malicious(std::size_t client) const { return plan_.malicious_ids.contains(client); }

  // Called before the clients of `round` train. Decides the start round,
  // takes the clean anchor, and refreshes per-round anchors.
  void begin_round(std::size_t round, const core::ParameterVector& global,
                   const std::vector<double>& acc_history,
                   const std::map<std::size_t, data::Dataset>& malicious_data);

  bool active() const { return active_; }
  std::optional<std::size_t> start_round() const { return started_at_; }
  const std::map<std::size_t, MaliciousClientState>& states() const { return states_; }

  // Update of a malicious client this round. Benign-identical before start.
  core::ParameterVector train(std::size_t client, const core::ParameterVector& global,
                              const data::Dataset& client_ds, std::uint64_t seed) const;

  // Dataset a data-poisoning client trains on once the attack is active.
  data::Dataset poisoned(std::size_t client, const data::Dataset& client_ds) const;

 private:
  void refresh_anchor(MaliciousClientState& s, const core::ParameterVector& clean,
                      const data::Dataset* own_data);

  AttackPlan plan_;
  std::shared_ptr<const core::EncoderSpec> spec_;
  data::GlobalTrigger global_trigger_;
  protocol::FederationConfig fed_;
  std::uint64_t seed_;
  std::map<std::size_t, MaliciousClientState> states_;
  bool active_ = false;
  std::optional<std::size_t> started_at_;
};

}  // namespace fssl::attack
