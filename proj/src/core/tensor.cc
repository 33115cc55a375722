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

#include "fssl/core/tensor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "fssl/core/error.h"

namespace fssl::core {

std::size_t shape_product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_product(shape_) != values_.size()) {
    throw ShapeError("tensor shape " + shape_string() + " does not match " +
                     std::to_string(values_.size()) + " values");
  }
}

std::size_t Tensor::row_size() const {
  if (shape_.empty()) return 0;
  return shape_product(std::span(shape_).subspan(1));
}

std::span<double> Tensor::row(std::size_t i) {
  const std::size_t n = row_size();
  return std::span(values_).subspan(i * n, n);
}

std::span<const double> Tensor::row(std::size_t i) const {
  const std::size_t n = row_size();
  return std::span(values_).subspan(i * n, n);
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> shape = shape_;
  shape.at(0) = indices.size();
  Tensor out(std::move(shape));
  const std::size_t n = row_size();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows()) throw ShapeError("gather index out of range");
    std::copy_n(values_.begin() + indices[k] * n, n, out.values_.begin() + k * n);
  }
  return out;
}

void Tensor::reshape(std::vector<std::size_t> shape) {
  if (shape_product(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_string());
  }
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ',';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor concat_rows(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  std::vector<std::size_t> shape = parts.front()->shape();
  std::size_t rows = 0;
  for (const Tensor* t : parts) {
    if (t->rank() != shape.size() ||
        !std::equal(t->shape().begin() + 1, t->shape().end(), shape.begin() + 1)) {
      throw ShapeError("concat_rows trailing shape mismatch: " + t->shape_string());
    }
    rows += t->rows();
  }
  shape[0] = rows;
  std::vector<double> values;
  values.reserve(shape_product(shape));
  for (const Tensor* t : parts) {
    values.insert(values.end(), t->values().begin(), t->values().end());
  }
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace fssl::core
