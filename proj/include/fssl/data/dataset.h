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
#include <filesystem>
#include <span>
#include <vector>

#include "fssl/core/encoder.h"
#include "fssl/core/rng.h"
#include "fssl/core/tensor.h"

namespace fssl::data {

// Images [N, H, W, C] with values in [0, 1]. Labels are optional and only
// consumed by partitioning and evaluation.
struct Dataset {
  core::Tensor images;
  std::vector<int> labels;

  std::size_t size() const { return images.rows(); }
  bool has_labels() const { return !labels.empty(); }
  core::Shape3 image_shape() const;
  std::vector<std::size_t> indices_of(int label) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct SynthesisConfig {
  std::size_t classes = 4;
  std::size_t per_class = 100;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 1;
  double noise = 0.08;          // per-pixel Gaussian sigma
  std::size_t max_shift = 1;    // per-sample translation in pixels
  double contrast_jitter = 0.15;
  // Selects the family of class prototypes; a different family is a
  // disjoint distribution.
  std::uint64_t family = 0;
};

// Class-specific smooth prototypes plus seeded nuisance (translation,
// contrast, pixel noise). Samples are ordered class-major. With all nuisance
// set to zero every image of a class equals its prototype.
Dataset synthesize_dataset(const SynthesisConfig& config, std::uint64_t seed);

// Raw binary dataset, little-endian:
//   char[4] "FSDS", u32 N, u32 H, u32 W, u32 C, u8 has_labels,
//   N*H*W*C u8 pixels (value / 255), then N i32 labels when has_labels.
void write_raw_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_raw_dataset(const std::filesystem::path& path);

// Light augmentation for contrastive views.
struct AugmentConfig {
  std::size_t max_shift = 2;
  bool flip = true;
  double brightness = 0.1;
  double noise = 0.03;
};

core::Tensor augment(const core::Tensor& batch, const AugmentConfig& config, Rng& rng);

}  // namespace fssl::data
