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

#include "fssl/core/optimizer.h"

#include <cmath>

#include "fssl/core/error.h"

namespace fssl::core {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("sgd momentum must lie in [0, 1)");
  if (kind == OptimizerKind::kAdam) {
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
  }
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(OptimizerConfig config, bool freeze_batchnorm)
    : config_(config), freeze_batchnorm_(freeze_batchnorm) {
  config_.validate();
}

bool Optimizer::updatable(SegmentKind kind) const {
  if (!is_trainable(kind)) return false;
  return !(freeze_batchnorm_ && is_batchnorm(kind));
}

void Optimizer::step(ParameterVector& params, const ParameterVector& grad) {
  require_same_layout(params, grad, "optimizer step");
  ++steps_;
  if (config_.kind == OptimizerKind::kSgd) {
    const bool heavy = config_.momentum > 0.0;
    if (heavy && m_.size() != params.size()) m_.assign(params.size(), 0.0);
    for (const Segment& s : params.layout().segments()) {
      if (!updatable(s.kind)) continue;
      for (std::size_t i = s.offset; i < s.offset + s.length; ++i) {
        double g = grad[i];
        if (heavy) {
          m_[i] = config_.momentum * m_[i] + g;
          g = m_[i];
        }
        params[i] -= config_.learning_rate * g;
      }
    }
    return;
  }
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (const Segment& s : params.layout().segments()) {
    if (!updatable(s.kind)) continue;
    for (std::size_t i = s.offset; i < s.offset + s.length; ++i) {
      const double g = grad[i];
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace fssl::core
