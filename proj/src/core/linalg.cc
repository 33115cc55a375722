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

#include "fssl/core/linalg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "fssl/core/rng.h"

namespace fssl::core {

std::vector<double> center_columns(Matrix& m) {
  std::vector<double> mean(m.cols, 0.0);
  if (m.rows == 0) return mean;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) mean[j] += m.row(i)[j];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) m.row(i)[j] -= mean[j];
  }
  return mean;
}

PrincipalComponents principal_components(const Matrix& x, std::size_t count,
                                         std::uint64_t seed, double tolerance) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  if (n == 0 || d == 0) throw std::invalid_argument("PCA of empty data");
  // Gram matrix G = X X^T; its eigenvectors u give components X^T u / |X^T u|.
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += x.row(i)[k] * x.row(j)[k];
      gram[i * n + j] = gram[j * n + i] = s;
    }
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += gram[i * n + i];

  PrincipalComponents pc;
  pc.components = Matrix{count, d, std::vector<double>(count * d, 0.0)};
  pc.scores = Matrix{n, count, std::vector<double>(n * count, 0.0)};
  pc.variances.assign(count, 0.0);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> found;
  for (std::size_t c = 0; c < count; ++c) {
    if (trace <= 0.0) break;
    std::vector<double> u(n);
    for (double& v : u) v = gauss(rng);
    double lambda = 0.0;
    for (int it = 0; it < 1000; ++it) {
      for (const auto& f : found) {
        double p = 0.0;
        for (std::size_t i = 0; i < n; ++i) p += f[i] * u[i];
        for (std::size_t i = 0; i < n; ++i) u[i] -= p * f[i];
      }
      std::vector<double> next(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) next[i] += gram[i * n + j] * u[j];
      }
      double norm = 0.0;
      for (double v : next) norm += v * v;
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        lambda = 0.0;
        break;
      }
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] /= norm;
        change = std::max(change, std::abs(next[i] - u[i]));
      }
      u = std::move(next);
      lambda = norm;
      if (change < 1e-13) break;
    }
    // Re-orthogonalize against earlier vectors to keep the basis clean.
    for (const auto& f : found) {
      double p = 0.0;
      for (std::size_t i = 0; i < n; ++i) p += f[i] * u[i];
      for (std::size_t i = 0; i < n; ++i) u[i] -= p * f[i];
    }
    double un = 0.0;
    for (double v : u) un += v * v;
    un = std::sqrt(un);
    if (lambda <= tolerance * trace || un == 0.0) break;
    for (double& v : u) v /= un;
    std::vector<double> comp(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) comp[k] += u[i] * x.row(i)[k];
    }
    double cn = 0.0;
    for (double v : comp) cn += v * v;
    cn = std::sqrt(cn);
    if (cn == 0.0) break;
    for (std::size_t k = 0; k < d; ++k) pc.components.row(c)[k] = comp[k] / cn;
    pc.variances[c] = lambda / static_cast<double>(n);
    found.push_back(std::move(u));
    ++pc.rank;
  }
  for (std::size_t c = 0; c < count; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += x.row(i)[k] * pc.components.row(c)[k];
      pc.scores.row(i)[c] = s;
    }
  }
  return pc;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

}  // namespace

KMeansResult kmeans(const Matrix& pts, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
  const std::size_t n = pts.rows;
  const std::size_t d = pts.cols;
  if (k == 0 || n < k) throw std::invalid_argument("kmeans needs at least k points");
  Rng rng(seed);
  KMeansResult r;
  r.centroids = Matrix{k, d, std::vector<double>(k * d, 0.0)};
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::vector<std::size_t> chosen{first(rng)};
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(pts.row(i), pts.row(chosen.back()), d));
      total += best[i];
    }
    std::size_t pick = 0;
    if (total == 0.0) {
      // All remaining points coincide with a centroid; take the first unused.
      while (std::find(chosen.begin(), chosen.end(), pick) != chosen.end()) ++pick;
    } else {
      std::uniform_real_distribution<double> unit(0.0, total);
      double target = unit(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= best[pick];
        if (target <= 0.0 && best[pick] > 0.0) break;
      }
    }
    chosen.push_back(pick);
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(pts.row(chosen[c]), d, r.centroids.row(c));
  }
  r.assignment.assign(n, 0);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = sq_dist(pts.row(i), r.centroids.row(c), d);
        if (dist < bd) {
          bd = dist;
          arg = c;
        }
      }
      if (arg != r.assignment[i]) changed = true;
      r.assignment[i] = arg;
    }
    if (!changed) break;
    std::vector<std::size_t> counts(k, 0);
    Matrix next{k, d, std::vector<double>(k * d, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.assignment[i]];
      for (std::size_t j = 0; j < d; ++j) next.row(r.assignment[i])[j] += pts.row(i)[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        std::copy_n(r.centroids.row(c), d, next.row(c));
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) next.row(c)[j] /= static_cast<double>(counts[c]);
    }
    r.centroids = std::move(next);
  }
  return r;
}

}  // namespace fssl::core
