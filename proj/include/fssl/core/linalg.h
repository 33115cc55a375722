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
#include <vector>

namespace fssl::core {

// Row-major matrix of `rows` points in `cols` dimensions.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double* row(std::size_t i) { return values.data() + i * cols; }
  const double* row(std::size_t i) const { return values.data() + i * cols; }
};

// Subtracts the column means in place and returns them.
std::vector<double> center_columns(Matrix& m);

struct PrincipalComponents {
  // Unit-norm, mutually orthogonal directions in column space, one per row.
  Matrix components;
  std::vector<double> variances;  // eigenvalues of the Gram matrix / rows
  // Points projected onto the components, [rows x found].
  Matrix scores;
  // Number of components with non-negligible variance.
  std::size_t rank = 0;
};

// Top `count` principal components of already-centered data, found by power
// iteration with deflation on the rows x rows Gram matrix. Components whose
// variance is below `tolerance` times the total are reported as zero rows
// and excluded from `rank`.
PrincipalComponents principal_components(const Matrix& centered, std::size_t count,
                                         std::uint64_t seed, double tolerance = 1e-12);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Matrix centroids;
};

// Lloyd's algorithm with k-means++ seeding. Deterministic given `seed`.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

}  // namespace fssl::core
