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
#include <span>
#include <vector>

#include "fssl/core/encoder.h"
#include "fssl/core/losses.h"
#include "fssl/core/optimizer.h"
#include "fssl/core/parameter_vector.h"
#include "fssl/data/dataset.h"

namespace fssl::protocol {

struct FederationConfig {
  std::size_t n_clients = 10;
  std::size_t clients_per_round = 5;
  std::size_t local_epochs = 3;  // tau
  std::size_t rounds = 40;
  std::size_t per_client_size = 200;
  std::size_t batch_size = 16;
  double temperature = core::kDefaultTemperature;
  core::OptimizerConfig optimizer;
  data::AugmentConfig augment;

  // Throws ConfigError.
  void validate() const;
};

// What a defense sees of a client upload.
struct UploadedModel {
  std::size_t client_id = 0;
  core::ParameterVector params;
  std::size_t data_size = 0;
};

// Upload plus the ground-truth role, which only the harness reads.
class ClientUpdate {
 public:
  ClientUpdate(UploadedModel upload, bool is_malicious)
      : upload_(std::move(upload)), malicious_(is_malicious) {}

  const UploadedModel& upload() const { return upload_; }
  UploadedModel& upload() { return upload_; }
  bool is_malicious_truth() const { return malicious_; }

 private:
  UploadedModel upload_;
  bool malicious_;
};

// Uniform sample without replacement of clients_per_round ids, sorted.
std::vector<std::size_t> select_clients(const FederationConfig& cfg, std::size_t round,
                                        std::uint64_t seed);

// Runs `epochs` passes of two-view contrastive training over `images` in
// place. Batches are reshuffled every epoch; a trailing batch with fewer
// than two images is dropped. BN running statistics follow the batch
// moments.
void contrastive_epochs(const core::EncoderSpec& spec, core::ParameterVector& params,
                        const core::Tensor& images, const FederationConfig& cfg,
                        std::size_t epochs, core::Optimizer& optimizer, Rng& rng);

// tau epochs of contrastive training started from `global`, using a fresh
// optimizer. `seed` should be derived from (master, client, round).
core::ParameterVector local_train_benign(const core::EncoderSpec& spec,
                                         const core::ParameterVector& global,
                                         const data::Dataset& client_ds,
                                         const FederationConfig& cfg, std::uint64_t seed);

// sum_i (n_i / sum_j n_j) * theta_i. Throws std::invalid_argument on an
// empty set or zero data sizes and ShapeError on mixed layouts.
core::ParameterVector fedavg(std::span<const UploadedModel> updates);

}  // namespace fssl::protocol
