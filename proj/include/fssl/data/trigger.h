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
#include <string>
#include <vector>

#include "fssl/core/encoder.h"
#include "fssl/core/tensor.h"
#include "fssl/data/dataset.h"

namespace fssl::data {

// A rectangular patch pasted at (row, col). patch is [h, w, C].
struct TriggerPattern {
  core::Tensor patch;
  std::size_t row = 0;
  std::size_t col = 0;
  std::string id;

  std::size_t height() const { return patch.dim(0); }
  std::size_t width() const { return patch.dim(1); }
  bool fits(const core::Shape3& image) const;
  bool overlaps(const TriggerPattern& other) const;
};

// Union of local patterns with pairwise disjoint footprints. Also used as a
// single client's trigger, since the assembled pattern is a union.
struct GlobalTrigger {
  std::vector<TriggerPattern> locals;

  bool disjoint() const;
  // Pixel mask [H, W] marking the union footprint.
  std::vector<bool> footprint(const core::Shape3& image) const;
};

TriggerPattern solid_patch(std::size_t height, std::size_t width, std::size_t channels,
                           std::size_t row, std::size_t col, double value,
                           std::string id);

// One size x size square in the bottom-right corner.
GlobalTrigger square_trigger(const core::Shape3& image, std::size_t size = 3,
                             double value = 1.0);

// Four disjoint size x size patches at the corners of the bottom-right
// quadrant.
GlobalTrigger quad_corner_triggers(const core::Shape3& image, std::size_t size = 2,
                                   double value = 1.0);

// Returns a copy of `images` ([N, H, W, C] or [H, W, C]) with the patch
// region(s) overwritten. Throws std::out_of_range when a patch does not fit.
core::Tensor embed_trigger(const core::Tensor& images, const TriggerPattern& trigger);
core::Tensor embed_trigger(const core::Tensor& images, const GlobalTrigger& trigger);

// Pastes `trigger` into round(fraction * |target class|) seeded images of
// `target_class`. Labels and other images are untouched.
Dataset poison_dataset_labels_free(const Dataset& ds, int target_class,
                                   const GlobalTrigger& trigger, double fraction,
                                   std::uint64_t seed,
                                   std::vector<std::size_t>* poisoned = nullptr);

}  // namespace fssl::data
