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

#include "fssl/protocol/simulation.h"

#include <chrono>
#include <exception>
#include <stdexcept>
#include <thread>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"

namespace fssl::protocol {

using core::ParameterVector;

namespace {

std::vector<ClientUpdate> train_round(const FederationSetup& setup, attack::Attacker* attacker,
                                      const std::vector<std::size_t>& selected,
                                      const ParameterVector& global, std::size_t round,
                                      std::size_t threads) {
  std::vector<std::optional<ParameterVector>> trained(selected.size());
  auto work = [&](std::size_t k) {
    const std::size_t id = selected[k];
    const data::Dataset& ds = setup.client_data.at(id);
    const std::uint64_t seed = derive_seed(setup.seed, Stream::kClient, {id, round});
    trained[k] = attacker ? attacker->train(id, global, ds, seed)
                          : local_train_benign(*setup.spec, global, ds, setup.federation, seed);
  };
  if (threads <= 1 || selected.size() <= 1) {
    for (std::size_t k = 0; k < selected.size(); ++k) work(k);
  } else {
    std::vector<std::exception_ptr> errors(selected.size());
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(threads, selected.size());
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < selected.size(); k += workers) {
          try {
            work(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<ClientUpdate> out;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const std::size_t id = selected[k];
    const bool bad = attacker && attacker->active() && attacker->is_malicious(id);
    out.emplace_back(UploadedModel{id, std::move(*trained[k]), setup.client_data[id].size()}, bad);
  }
  return out;
}

}  // namespace

RunResult run_federation(const FederationSetup& setup, attack::Attacker* attacker,
                         defense::Defense& defense, const eval::EvalPlan& plan,
                         const RunHooks& hooks) {
  setup.federation.validate();
  if (setup.client_data.size() != setup.federation.n_clients) {
    throw ConfigError("one dataset per client is required");
  }
  RunResult result;
  ParameterVector global = setup.initial;
  core::EncoderState state{setup.spec, global, false};
  const eval::AccAsr initial = eval::measure(state, plan);
  result.initial_acc = initial.acc;
  result.initial_asr = initial.asr;
  std::vector<double> acc_history{initial.acc};

  std::map<std::size_t, data::Dataset> malicious_data;
  if (attacker) {
    for (std::size_t id : attacker->plan().malicious_ids) {
      malicious_data.emplace(id, setup.client_data.at(id));
    }
  }
  std::size_t attacking_rounds = 0;
  for (std::size_t round = 0; round < setup.federation.rounds; ++round) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      if (attacker) {
        const bool was_active = attacker->active();
        attacker->begin_round(round, global, acc_history, malicious_data);
        if (!was_active && attacker->active()) {
          result.attack_start = round;
          result.pre_attack_params = global;
        }
      }
      const std::vector<std::size_t> selected =
          select_clients(setup.federation, round, setup.seed);
      std::vector<ClientUpdate> updates =
          train_round(setup, attacker, selected, global, round, hooks.threads);
      if (hooks.on_uploads) hooks.on_uploads(round, global, updates);

      std::vector<UploadedModel> uploads;
      RoundReport report;
      report.round = round;
      report.selected = selected;
      report.attack_active = attacker && attacker->active();
      for (const auto& u : updates) {
        uploads.push_back(u.upload());
        if (u.is_malicious_truth()) report.malicious_selected.insert(u.upload().client_id);
      }
      const defense::RoundContext ctx{setup.spec, &global, round, setup.seed};
      defense::DefenseOutcome outcome = defense.aggregate(uploads, ctx);
      if (!outcome.aggregated.same_layout(global)) {
        throw ShapeError("defense returned parameters with a different layout");
      }
      global = std::move(outcome.aggregated);
      report.flagged = std::move(outcome.flagged);
      report.kept_previous = outcome.kept_previous;
      report.note = std::move(outcome.note);
      std::map<std::size_t, int> scores;
      if (outcome.table) scores = outcome.table->scores;
      report.detection =
          eval::detection_stats(selected, report.flagged, scores, report.malicious_selected);
      report.table = std::move(outcome.table);

      state.params = global;
      const eval::AccAsr m = eval::measure(state, plan);
      report.acc = m.acc;
      report.asr = m.asr;
      acc_history.push_back(m.acc);
      report.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
      if (hooks.on_round) hooks.on_round(report);
      result.reports.push_back(std::move(report));
      if (attacker && attacker->active()) ++attacking_rounds;
      if (attacker && attacker->plan().attack_rounds > 0 &&
          attacking_rounds >= attacker->plan().attack_rounds) {
        break;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("round " + std::to_string(round) + ": " + e.what());
    }
  }
  result.attack_start = attacker ? attacker->start_round() : std::nullopt;
  result.final_params = global;
  return result;
}

}  // namespace fssl::protocol
