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
#include <memory>
#include <string>
#include <vector>

#include "fssl/core/parameter_vector.h"
#include "fssl/core/tensor.h"

namespace fssl::core {

enum class LayerKind : std::uint8_t { kConv, kDense, kBatchNorm, kRelu, kPool, kFlatten };

std::string to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t units = 0;    // conv output channels or dense output features
  std::size_t kernel = 0;   // conv kernel side or pool window
  std::size_t stride = 1;
  std::size_t padding = 0;

  static LayerSpec conv(std::size_t channels, std::size_t kernel, std::size_t stride,
                        std::size_t padding);
  static LayerSpec dense(std::size_t units);
  static LayerSpec batchnorm();
  static LayerSpec relu();
  static LayerSpec pool(std::size_t window);
  static LayerSpec flatten();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Activation shape per sample, NHWC. Flat activations use height = width = 1.
struct Shape3 {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;

  std::size_t size() const { return height * width * channels; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

// Immutable architecture description. Construction validates that layer
// shapes chain and derives the parameter layout.
class EncoderSpec {
 public:
  EncoderSpec(Shape3 input, std::vector<LayerSpec> layers);

  // conv(8,s2) -> bn -> relu -> conv(16,s2) -> bn -> relu -> flatten -> dense.
  static EncoderSpec desk_default(std::size_t channels, std::size_t side = 16,
                                  std::size_t embedding_dim = 32);
  // flatten -> dense(input size); pair with identity_parameters().
  static EncoderSpec identity(Shape3 input);
  // Two dense layers with a ReLU between them.
  static EncoderSpec mlp(Shape3 input, std::size_t hidden, std::size_t embedding_dim);

  const Shape3& input_shape() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Shape3& layer_input(std::size_t i) const { return shapes_.at(i); }
  const Shape3& layer_output(std::size_t i) const { return shapes_.at(i + 1); }
  std::size_t embedding_dim() const { return shapes_.back().size(); }
  const std::shared_ptr<const ParameterLayout>& layout() const { return layout_; }

  std::string canonical() const;
  std::uint64_t hash() const;

  friend bool operator==(const EncoderSpec& a, const EncoderSpec& b) {
    return a.input_ == b.input_ && a.layers_ == b.layers_;
  }

 private:
  Shape3 input_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape3> shapes_;
  std::shared_ptr<const ParameterLayout> layout_;
};

// He-uniform weights, zero biases, unit BN scale, zero shift, running
// statistics (0, 1).
ParameterVector initialize_parameters(const EncoderSpec& spec, std::uint64_t seed);

// Identity weights for EncoderSpec::identity.
ParameterVector identity_parameters(const EncoderSpec& spec);

struct EncoderState {
  std::shared_ptr<const EncoderSpec> spec;
  ParameterVector params;
  bool bn_frozen = false;
};

enum class BnMode : std::uint8_t {
  kBatchStatistics,    // training: normalize with the batch moments
  kRunningStatistics,  // inspection, evaluation and frozen-BN training
};

struct BnCache {
  std::vector<double> batch_mean;
  std::vector<double> batch_var;  // biased
  std::vector<double> inv_std;
  std::vector<double> normalized;
  std::size_t count = 0;  // elements per channel
};

// Per-layer inputs retained for backward().
struct ForwardTrace {
  BnMode mode = BnMode::kRunningStatistics;
  std::size_t batch = 0;
  std::vector<Tensor> inputs;
  std::vector<BnCache> bn;
};

// Maps [B, H, W, C] to [B, embedding_dim]. Throws ShapeError on a shape
// mismatch and NumericError on a non-finite activation.
Tensor forward(const EncoderSpec& spec, const ParameterVector& params,
               const Tensor& batch, BnMode mode, ForwardTrace* trace = nullptr);

// Inference-mode forward.
Tensor forward(const EncoderState& state, const Tensor& batch);

// Gradient of sum(grad_output * output) with respect to all parameters.
// Running-statistic segments receive zero.
ParameterVector backward(const EncoderSpec& spec, const ParameterVector& params,
                         const ForwardTrace& trace, const Tensor& grad_output);

// Exponential moving update of BN running statistics from a batch-mode trace.
void update_running_statistics(const EncoderSpec& spec, ParameterVector& params,
                               const ForwardTrace& trace, double momentum = 0.1);

// Zeroes BN affine gradients; used when BN is frozen.
void mask_batchnorm(ParameterVector& grad);

}  // namespace fssl::core
