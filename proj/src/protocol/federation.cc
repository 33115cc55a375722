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

#include "fssl/protocol/federation.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fssl/core/error.h"

namespace fssl::protocol {

using core::ParameterVector;
using core::Tensor;

void FederationConfig::validate() const {
  if (n_clients == 0) throw ConfigError("federation.n_clients must be >= 1");
  if (clients_per_round == 0 || clients_per_round > n_clients) {
    throw ConfigError("federation.clients_per_round must lie in [1, n_clients]");
  }
  if (local_epochs == 0) throw ConfigError("federation.local_epochs must be >= 1");
  if (per_client_size == 0) throw ConfigError("federation.per_client_size must be >= 1");
  if (batch_size < 2) throw ConfigError("federation.batch_size must be >= 2");
  if (!(temperature > 0.0)) throw ConfigError("federation.temperature must be > 0");
  optimizer.validate();
}

std::vector<std::size_t> select_clients(const FederationConfig& cfg, std::size_t round,
                                        std::uint64_t seed) {
  std::vector<std::size_t> ids(cfg.n_clients);
  std::iota(ids.begin(), ids.end(), 0);
  if (cfg.clients_per_round >= cfg.n_clients) return ids;
  Rng rng(derive_seed(seed, Stream::kSelect, {round}));
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < cfg.clients_per_round; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(cfg.clients_per_round);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void contrastive_epochs(const core::EncoderSpec& spec, ParameterVector& params,
                        const Tensor& images, const FederationConfig& cfg,
                        std::size_t epochs, core::Optimizer& optimizer, Rng& rng) {
  const std::size_t n = images.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - start);
      if (count < 2) break;
      const Tensor batch =
          images.gather_rows(std::span(order).subspan(start, count));
      const Tensor a = data::augment(batch, cfg.augment, rng);
      const Tensor b = data::augment(batch, cfg.augment, rng);
      core::ObjectiveResult r = core::contrastive_objective(
          spec, params, a, b, cfg.temperature, core::BnMode::kBatchStatistics);
      core::update_running_statistics(spec, params, r.trace);
      optimizer.step(params, r.gradient);
    }
  }
}

ParameterVector local_train_benign(const core::EncoderSpec& spec, const ParameterVector& global,
                                   const data::Dataset& client_ds, const FederationConfig& cfg,
                                   std::uint64_t seed) {
  ParameterVector params = global;
  core::Optimizer optimizer(cfg.optimizer);
  Rng rng(seed);
  contrastive_epochs(spec, params, client_ds.images, cfg, cfg.local_epochs, optimizer, rng);
  return params;
}

ParameterVector fedavg(std::span<const UploadedModel> updates) {
  if (updates.empty()) throw std::invalid_argument("fedavg of an empty update set");
  double total = 0.0;
  for (const UploadedModel& u : updates) {
    require_same_layout(updates.front().params, u.params, "fedavg");
    if (u.data_size == 0) throw std::invalid_argument("fedavg: data_size must be >= 1");
    total += static_cast<double>(u.data_size);
  }
  ParameterVector out = updates.front().params.zeros_like();
  for (const UploadedModel& u : updates) {
    const double w = static_cast<double>(u.data_size) / total;
    auto src = u.params.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
  }
  return out;
}

}  // namespace fssl::protocol
