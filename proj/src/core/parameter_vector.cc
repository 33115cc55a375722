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

#include "fssl/core/parameter_vector.h"

#include <cstring>
#include <utility>

#include "fssl/core/error.h"

namespace fssl::core {

std::string to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kWeight: return "weight";
    case SegmentKind::kBias: return "bias";
    case SegmentKind::kBnGamma: return "bn_gamma";
    case SegmentKind::kBnBeta: return "bn_beta";
    case SegmentKind::kBnRunningMean: return "bn_running_mean";
    case SegmentKind::kBnRunningVar: return "bn_running_var";
  }
  return "unknown";
}

bool is_batchnorm(SegmentKind kind) {
  return kind == SegmentKind::kBnGamma || kind == SegmentKind::kBnBeta ||
         kind == SegmentKind::kBnRunningMean || kind == SegmentKind::kBnRunningVar;
}

bool is_trainable(SegmentKind kind) {
  return kind != SegmentKind::kBnRunningMean && kind != SegmentKind::kBnRunningVar;
}

ParameterLayout::ParameterLayout(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  std::size_t expected = 0;
  for (const Segment& s : segments_) {
    if (s.offset != expected) throw ShapeError("parameter segments are not contiguous");
    expected += s.length;
  }
  total_ = expected;
}

const Segment& ParameterLayout::find(std::uint32_t layer, SegmentKind kind) const {
  for (const Segment& s : segments_) {
    if (s.layer == layer && s.kind == kind) return s;
  }
  throw ShapeError("no segment " + to_string(kind) + " for layer " + std::to_string(layer));
}

ParameterVector::ParameterVector(std::shared_ptr<const ParameterLayout> layout,
                                 double fill)
    : layout_(std::move(layout)), values_(layout_->total(), fill) {}

ParameterVector::ParameterVector(std::shared_ptr<const ParameterLayout> layout,
                                 std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_->total()) {
    throw ShapeError("parameter count " + std::to_string(values_.size()) +
                     " does not match layout total " + std::to_string(layout_->total()));
  }
}

ParameterVector ParameterVector::from_values(std::vector<double> values) {
  auto layout = std::make_shared<const ParameterLayout>(
      std::vector<Segment>{{0, SegmentKind::kWeight, 0, values.size()}});
  return ParameterVector(std::move(layout), std::move(values));
}

bool ParameterVector::same_layout(const ParameterVector& other) const {
  if (layout_ == other.layout_) return true;
  if (!layout_ || !other.layout_) return false;
  return *layout_ == *other.layout_;
}

bool operator==(const ParameterVector& a, const ParameterVector& b) {
  if (!a.same_layout(b)) return false;
  return a.values_.size() == b.values_.size() &&
         (a.values_.empty() ||
          std::memcmp(a.values_.data(), b.values_.data(),
                      a.values_.size() * sizeof(double)) == 0);
}

void require_same_layout(const ParameterVector& a, const ParameterVector& b,
                         const char* context) {
  if (!a.same_layout(b)) throw ShapeError(std::string(context) + ": parameter layout mismatch");
}

ParameterVector subtract(const ParameterVector& a, const ParameterVector& b) {
  require_same_layout(a, b, "subtract");
  ParameterVector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

ParameterVector add_scaled(const ParameterVector& a, const ParameterVector& b,
                           double scale) {
  require_same_layout(a, b, "add_scaled");
  ParameterVector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * b[i];
  return out;
}

}  // namespace fssl::core
