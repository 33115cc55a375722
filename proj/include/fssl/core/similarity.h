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

#include <span>

namespace fssl::core {

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// Cosine similarity in [-1, 1]. Throws ZeroNormError if either side is the
// zero vector and ShapeError on length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// As above, but a zero vector yields similarity 0.
double cosine_similarity_or_zero(std::span<const double> a,
                                 std::span<const double> b);

// In-place L2 normalization. Zero vectors are left as zero.
void l2_normalize(std::span<double> a);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace fssl::core
