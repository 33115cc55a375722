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

#include "fssl/defense/flare.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fssl/core/similarity.h"

namespace fssl::defense {

using core::Tensor;

double median_pairwise_distance(const EmbeddingCube& cube) {
  std::vector<std::span<const double>> rows;
  for (const Tensor& t : cube) {
    for (std::size_t i = 0; i < t.rows(); ++i) rows.push_back(t.row(i));
  }
  std::vector<double> dist;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      dist.push_back(std::sqrt(core::squared_distance(rows[i], rows[j])));
    }
  }
  if (dist.empty()) return 0.0;
  const std::size_t n = dist.size();
  std::nth_element(dist.begin(), dist.begin() + static_cast<long>(n / 2), dist.end());
  double hi = dist[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(dist.begin(), dist.begin() + static_cast<long>(n / 2));
  return (lo + hi) / 2.0;
}

double mmd(const Tensor& x, const Tensor& y, double bandwidth) {
  if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("MMD of an empty set");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("MMD bandwidth must be > 0");
  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  auto mean_kernel = [&](const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < b.rows(); ++j) {
        s += std::exp(-scale * core::squared_distance(a.row(i), b.row(j)));
      }
    }
    return s / static_cast<double>(a.rows() * b.rows());
  };
  return std::max(0.0, mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y));
}

FlareTrust flare_trust(const EmbeddingCube& cube, std::size_t neighbors) {
  const std::size_t n = cube.size();
  if (n < 2) throw std::invalid_argument("FLARE needs at least two models");
  double bw = median_pairwise_distance(cube);
  if (!(bw > 0.0)) bw = 1.0;
  FlareTrust t;
  t.mmd.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) t.mmd[i][j] = t.mmd[j][i] = mmd(cube[i], cube[j], bw);
  }
  const std::size_t k = std::min(neighbors == 0 ? n / 2 : neighbors, n - 1);
  t.votes.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    std::stable_sort(others.begin(), others.end(),
                     [&](std::size_t a, std::size_t b) { return t.mmd[i][a] < t.mmd[i][b]; });
    for (std::size_t r = 0; r < k; ++r) ++t.votes[others[r]];
  }
  const double mx = static_cast<double>(*std::max_element(t.votes.begin(), t.votes.end()));
  double total = 0.0;
  t.trust.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.trust[i] = std::exp(static_cast<double>(t.votes[i]) - mx);
    total += t.trust[i];
  }
  for (double& v : t.trust) v /= total;
  return t;
}

Selection flare(std::span<const protocol::UploadedModel> updates_in,
                const core::ParameterVector& global, const EmbeddingCube& cube,
                std::size_t neighbors) {
  if (updates_in.size() != cube.size()) {
    throw std::invalid_argument("FLARE needs one embedding set per update");
  }
  for (std::size_t i = 1; i < updates_in.size(); ++i) {
    if (updates_in[i].client_id <= updates_in[i - 1].client_id) {
      throw std::invalid_argument("FLARE expects updates sorted by client id");
    }
  }
  const FlareTrust t = flare_trust(cube, neighbors);
  Selection out;
  out.aggregated = global;
  for (std::size_t i = 0; i < updates_in.size(); ++i) {
    const auto& u = updates_in[i];
    require_same_layout(u.params, global, "flare");
    for (std::size_t p = 0; p < global.size(); ++p) {
      out.aggregated[p] += t.trust[i] * (u.params[p] - global[p]);
    }
    if (t.votes[i] > 0) out.kept.push_back(u.client_id);
  }
  return out;
}

}  // namespace fssl::defense
