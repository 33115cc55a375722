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
#include <span>
#include <string>
#include <vector>

namespace fssl::core {

enum class SegmentKind : std::uint8_t {
  kWeight = 0,
  kBias = 1,
  kBnGamma = 2,
  kBnBeta = 3,
  kBnRunningMean = 4,
  kBnRunningVar = 5,
};

std::string to_string(SegmentKind kind);

// BN affine terms and running statistics.
bool is_batchnorm(SegmentKind kind);
// Running statistics are carried and aggregated but never receive gradients.
bool is_trainable(SegmentKind kind);

struct Segment {
  std::uint32_t layer = 0;
  SegmentKind kind = SegmentKind::kWeight;
  std::size_t offset = 0;
  std::size_t length = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Ordered segment table. Two vectors with equal layouts are coordinate-wise
// comparable.
class ParameterLayout {
 public:
  ParameterLayout() = default;
  explicit ParameterLayout(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t total() const { return total_; }
  const Segment& find(std::uint32_t layer, SegmentKind kind) const;

  friend bool operator==(const ParameterLayout& a, const ParameterLayout& b) {
    return a.segments_ == b.segments_;
  }

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

// Flat parameter (or gradient) buffer tagged with its layout.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::shared_ptr<const ParameterLayout> layout,
                           double fill = 0.0);
  ParameterVector(std::shared_ptr<const ParameterLayout> layout,
                  std::vector<double> values);

  // A single-segment vector; convenient for aggregation over raw arrays.
  static ParameterVector from_values(std::vector<double> values);

  const ParameterLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParameterLayout>& layout_ptr() const { return layout_; }
  bool same_layout(const ParameterVector& other) const;

  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> segment(const Segment& s) {
    return std::span(values_).subspan(s.offset, s.length);
  }
  std::span<const double> segment(const Segment& s) const {
    return std::span(values_).subspan(s.offset, s.length);
  }

  ParameterVector zeros_like() const { return ParameterVector(layout_, 0.0); }

  // Bitwise equality of layout and values.
  friend bool operator==(const ParameterVector& a, const ParameterVector& b);

 private:
  std::shared_ptr<const ParameterLayout> layout_;
  std::vector<double> values_;
};

// Throws ShapeError when the layouts differ.
void require_same_layout(const ParameterVector& a, const ParameterVector& b,
                         const char* context);

ParameterVector subtract(const ParameterVector& a, const ParameterVector& b);
// a + scale * b
ParameterVector add_scaled(const ParameterVector& a, const ParameterVector& b,
                           double scale);

}  // namespace fssl::core
