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

#include <cstdint>
#include <string>
#include <vector>

#include "fssl/core/parameter_vector.h"

namespace fssl::core {

enum class OptimizerKind : std::uint8_t { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Heavy-ball momentum for sgd; 0 gives plain gradient descent.
  double momentum = 0.0;

  // Throws ConfigError when learning_rate <= 0 or betas/momentum fall outside [0, 1).
  void validate() const;
};

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

// Stateful first-order optimizer. Adam moments persist across step() calls.
// Running-statistic segments are never touched; BN affine segments are left
// alone when `freeze_batchnorm` is set.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, bool freeze_batchnorm = false);

  void step(ParameterVector& params, const ParameterVector& grad);
  std::uint64_t steps() const { return steps_; }

 private:
  bool updatable(SegmentKind kind) const;

  OptimizerConfig config_;
  bool freeze_batchnorm_;
  std::uint64_t steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace fssl::core
