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
#include <span>
#include <string>

#include "fssl/core/encoder.h"
#include "fssl/core/parameter_vector.h"
#include "fssl/core/tensor.h"

namespace fssl::core {

inline constexpr double kDefaultTemperature = 0.5;

struct PairLoss {
  double loss = 0.0;
  Tensor grad_a;
  Tensor grad_b;
};

// NT-Xent over the 2B samples of two views. Row i of `a` and row i of `b`
// form the positive pair; the other 2B-2 samples are negatives. Embeddings
// are L2-normalized internally. Throws std::invalid_argument when B < 2.
PairLoss ntxent_loss(const Tensor& a, const Tensor& b, double temperature);

// Criterion substituted for cosine similarity inside the backdoor terms.
enum class SimilarityCriterion : std::uint8_t { kCosine, kMse, kCrossEntropy };

std::string to_string(SimilarityCriterion c);
SimilarityCriterion parse_criterion(const std::string& name);

// Dissimilarity D(a, b) that the backdoor objective minimizes: -cos(a, b),
// mean squared error, or cross-entropy of softmax(a) against softmax(b).
struct Dissimilarity {
  double value = 0.0;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
};
Dissimilarity dissimilarity(std::span<const double> a, std::span<const double> b,
                            SimilarityCriterion criterion);

struct ObjectiveResult {
  double loss = 0.0;
  ParameterVector gradient;
  ForwardTrace trace;
};

// Encodes both views as one 2B batch and returns the NT-Xent loss with its
// parameter gradient.
ObjectiveResult contrastive_objective(const EncoderSpec& spec, const ParameterVector& params,
                                      const Tensor& view_a, const Tensor& view_b,
                                      double temperature, BnMode mode);

struct BackdoorBatch {
  const Tensor* clean = nullptr;      // x, [B, H, W, C]
  const Tensor* triggered = nullptr;  // x with the trigger pasted, same shape
  const Tensor* reference = nullptr;  // x_target, [1, H, W, C]
  const Tensor* clean_anchor = nullptr;           // f(x, clean params), [B, d]
  std::span<const double> reference_anchor;       // f(x_target, clean params)
};

struct BackdoorWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  SimilarityCriterion criterion = SimilarityCriterion::kCosine;
};

struct BackdoorLoss {
  double total = 0.0;
  double hijack = 0.0;   // trigger-to-reference term plus reference anchoring
  double utility = 0.0;  // clean-embedding preservation term
  ParameterVector gradient;
  ForwardTrace trace;
};

// lambda1 * hijack + lambda2 * utility, where with the cosine criterion
//   hijack  = -mean_x s(f(x+e), f(x_t)) - s(f(x_t), f_clean(x_t))
//   utility = -mean_x s(f(x), f_clean(x))
// and f is evaluated at `params`. BN affine gradients are zeroed when
// `bn_frozen`; the forward then uses running statistics.
BackdoorLoss backdoor_loss(const EncoderSpec& spec, const ParameterVector& params,
                           const BackdoorBatch& batch, const BackdoorWeights& weights,
                           bool bn_frozen);

}  // namespace fssl::core
