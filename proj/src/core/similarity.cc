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

#include "fssl/core/similarity.h"

#include <algorithm>
#include <cmath>

#include "fssl/core/error.h"

namespace fssl::core {

namespace {
void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("similarity on vectors of length " + std::to_string(a.size()) +
                     " and " + std::to_string(b.size()));
  }
}
}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw ZeroNormError("cosine similarity of a zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double cosine_similarity_or_zero(std::span<const double> a,
                                 std::span<const double> b) {
  try {
    return cosine_similarity(a, b);
  } catch (const ZeroNormError&) {
    return 0.0;
  }
}

void l2_normalize(std::span<double> a) {
  const double n = l2_norm(a);
  if (n == 0.0) return;
  for (double& v : a) v /= n;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace fssl::core
