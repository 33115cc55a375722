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

#include "fssl/data/trigger.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"

namespace fssl::data {

using core::Tensor;

bool TriggerPattern::fits(const core::Shape3& image) const {
  return patch.rank() == 3 && patch.dim(2) == image.channels &&
         row + height() <= image.height && col + width() <= image.width;
}

bool TriggerPattern::overlaps(const TriggerPattern& o) const {
  return row < o.row + o.height() && o.row < row + height() && col < o.col + o.width() &&
         o.col < col + width();
}

bool GlobalTrigger::disjoint() const {
  for (std::size_t i = 0; i < locals.size(); ++i) {
    for (std::size_t j = i + 1; j < locals.size(); ++j) {
      if (locals[i].overlaps(locals[j])) return false;
    }
  }
  return true;
}

std::vector<bool> GlobalTrigger::footprint(const core::Shape3& image) const {
  std::vector<bool> mask(image.height * image.width, false);
  for (const TriggerPattern& t : locals) {
    if (!t.fits(image)) throw std::out_of_range("trigger '" + t.id + "' does not fit");
    for (std::size_t y = 0; y < t.height(); ++y) {
      for (std::size_t x = 0; x < t.width(); ++x) {
        mask[(t.row + y) * image.width + t.col + x] = true;
      }
    }
  }
  return mask;
}

TriggerPattern solid_patch(std::size_t height, std::size_t width, std::size_t channels,
                           std::size_t row, std::size_t col, double value, std::string id) {
  return {Tensor({height, width, channels}, value), row, col, std::move(id)};
}

GlobalTrigger square_trigger(const core::Shape3& image, std::size_t size, double value) {
  if (size == 0 || size > image.height || size > image.width) {
    throw ConfigError("square trigger size out of range");
  }
  return {{solid_patch(size, size, image.channels, image.height - size, image.width - size,
                       value, "square")}};
}

GlobalTrigger quad_corner_triggers(const core::Shape3& image, std::size_t size,
                                   double value) {
  const std::size_t top = image.height / 2;
  const std::size_t left = image.width / 2;
  if (size == 0 || 2 * size > image.height - top || 2 * size > image.width - left) {
    throw ConfigError("quad-corner patches do not fit the bottom-right quadrant");
  }
  const std::size_t bottom = image.height - size;
  const std::size_t right = image.width - size;
  const std::size_t c = image.channels;
  return {{solid_patch(size, size, c, top, left, value, "quad-tl"),
           solid_patch(size, size, c, top, right, value, "quad-tr"),
           solid_patch(size, size, c, bottom, left, value, "quad-bl"),
           solid_patch(size, size, c, bottom, right, value, "quad-br")}};
}

Tensor embed_trigger(const Tensor& images, const TriggerPattern& t) {
  Tensor out = images;
  const bool single = images.rank() == 3;
  if (!single && images.rank() != 4) throw ShapeError("embed_trigger expects images");
  const std::size_t off = single ? 0 : 1;
  const core::Shape3 shape{images.dim(off), images.dim(off + 1), images.dim(off + 2)};
  if (!t.fits(shape)) {
    throw std::out_of_range("trigger '" + t.id + "' at (" + std::to_string(t.row) + "," +
                            std::to_string(t.col) + ") does not fit the image");
  }
  const std::size_t n = single ? 1 : images.dim(0);
  const std::size_t c = shape.channels;
  for (std::size_t i = 0; i < n; ++i) {
    double* img = out.data() + i * shape.size();
    for (std::size_t y = 0; y < t.height(); ++y) {
      for (std::size_t x = 0; x < t.width(); ++x) {
        for (std::size_t k = 0; k < c; ++k) {
          img[((t.row + y) * shape.width + t.col + x) * c + k] =
              t.patch[(y * t.width() + x) * c + k];
        }
      }
    }
  }
  return out;
}

Tensor embed_trigger(const Tensor& images, const GlobalTrigger& trigger) {
  Tensor out = images;
  for (const TriggerPattern& t : trigger.locals) out = embed_trigger(out, t);
  return out;
}

Dataset poison_dataset_labels_free(const Dataset& ds, int target_class,
                                   const GlobalTrigger& trigger, double fraction,
                                   std::uint64_t seed, std::vector<std::size_t>* poisoned) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("poison fraction must lie in (0, 1]");
  }
  if (!ds.has_labels()) throw ConfigError("poisoning needs labels to locate the target class");
  std::vector<std::size_t> targets = ds.indices_of(target_class);
  if (targets.empty()) {
    throw ConfigError("target class " + std::to_string(target_class) + " is absent");
  }
  Rng rng(derive_seed(seed, Stream::kTrigger, {0xD0D0}));
  std::shuffle(targets.begin(), targets.end(), rng);
  const auto count = static_cast<std::size_t>(std::lround(fraction * targets.size()));
  targets.resize(count);
  std::sort(targets.begin(), targets.end());
  Dataset out = ds;
  for (std::size_t i : targets) {
    const Tensor patched = embed_trigger(ds.images.gather_rows(std::span(&i, 1)), trigger);
    std::copy(patched.values().begin(), patched.values().end(), out.images.row(i).begin());
  }
  if (poisoned) *poisoned = targets;
  return out;
}

}  // namespace fssl::data
