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

#include "fssl/defense/eminspector.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fssl/core/error.h"
#include "fssl/core/similarity.h"
#include "fssl/eval/metrics.h"

namespace fssl::defense {

using core::Tensor;

double accumulated_similarity(std::span<const std::vector<double>> embeddings, std::size_t i) {
  if (embeddings.size() < 2) throw std::invalid_argument("d_i needs at least two models");
  if (i >= embeddings.size()) throw std::out_of_range("model index out of range");
  double d = 0.0;
  for (std::size_t j = 0; j < embeddings.size(); ++j) {
    if (j != i) d += core::cosine_similarity_or_zero(embeddings[i], embeddings[j]);
  }
  return d;
}

std::vector<double> accumulated_similarities(const EmbeddingCube& cube, std::size_t item) {
  const std::size_t n = cube.size();
  if (n < 2) throw std::invalid_argument("d_i needs at least two models");
  // Rows are unit or zero, so the dot product is the cosine (or 0).
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = core::dot(cube[i].row(item), cube[j].row(item));
      d[i] += s;
      d[j] += s;
    }
  }
  return d;
}

double mean_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty list");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : (s[n / 2 - 1] + s[n / 2]) / 2.0;
}

double decision_boundary(std::span<const double> ds, BoundaryRule rule) {
  const double mean = mean_of(ds);
  return rule == BoundaryRule::kMean ? mean : std::max(mean, median_of(ds));
}

std::size_t top_fraction_count(double fraction, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

bool boundary_property_holds(std::span<const double> ds, std::size_t plus_count) {
  const std::size_t limit = (ds.size() + 1) / 2;
  if (plus_count <= limit) return true;
  const double boundary = decision_boundary(ds);
  return std::count(ds.begin(), ds.end(), boundary) > 1;
}

MaliciousScoreTable score_models(const EmbeddingCube& cube, std::span<const std::size_t> ids,
                                 const ScoringOptions& options) {
  const std::size_t n = cube.size();
  if (n < 2) throw std::invalid_argument("EmInspector needs at least two models");
  if (ids.size() != n) throw ShapeError("one client id per model is required");
  const std::size_t items = cube.front().rows();
  if (items == 0) throw std::invalid_argument("empty inspection set");
  MaliciousScoreTable table;
  for (std::size_t id : ids) table.scores[id] = 0;
  std::optional<std::size_t> top;
  if (options.top_fraction) top = top_fraction_count(*options.top_fraction, n);
  for (std::size_t u = 0; u < items; ++u) {
    const std::vector<double> d = accumulated_similarities(cube, u);
    std::vector<bool> plus(n, false);
    bool tie = false;
    if (top) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return d[a] != d[b] ? d[a] > d[b] : ids[a] < ids[b];
      });
      for (std::size_t r = 0; r < *top; ++r) plus[order[r]] = true;
    } else {
      const double boundary = decision_boundary(d, options.boundary);
      for (std::size_t i = 0; i < n; ++i) plus[i] = d[i] >= boundary;
      tie = std::count(d.begin(), d.end(), boundary) > 1;
    }
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < n; ++i) {
      table.scores[ids[i]] += plus[i] ? 1 : -1;
      if (plus[i]) flagged.push_back(ids[i]);
    }
    std::sort(flagged.begin(), flagged.end());
    table.item_flags.push_back(std::move(flagged));
    table.item_ties.push_back(tie);
  }
  return table;
}

EmbeddingCube embed_uploads(const core::EncoderSpec& spec,
                            std::span<const protocol::UploadedModel> updates,
                            const data::InspectionSet& inspection) {
  if (inspection.size() == 0) throw std::invalid_argument("empty inspection set");
  auto spec_ptr = std::make_shared<const core::EncoderSpec>(spec);
  EmbeddingCube cube;
  cube.reserve(updates.size());
  for (const auto& u : updates) {
    const core::EncoderState state{spec_ptr, u.params, false};
    cube.push_back(eval::embed_normalized(state, inspection.items));
  }
  return cube;
}

namespace {

DefenseOutcome decide(std::span<const protocol::UploadedModel> updates,
                      const core::ParameterVector& global, MaliciousScoreTable table) {
  DefenseOutcome out;
  out.flagged = table.flagged();
  std::vector<protocol::UploadedModel> survivors;
  for (const auto& u : updates) {
    if (!out.flagged.contains(u.client_id)) survivors.push_back(u);
  }
  if (survivors.empty()) {
    out.aggregated = global;
    out.kept_previous = true;
    out.note = "all uploads flagged; global model kept";
  } else {
    out.aggregated = protocol::fedavg(survivors);
  }
  out.table = std::move(table);
  return out;
}

}  // namespace

DefenseOutcome eminspector(const core::EncoderSpec& spec,
                           std::span<const protocol::UploadedModel> updates,
                           const data::InspectionSet& inspection,
                           const core::ParameterVector& global, const ScoringOptions& options) {
  if (updates.size() < 2) throw std::invalid_argument("EmInspector needs at least two updates");
  const auto sorted = sorted_by_client(updates);
  std::vector<std::size_t> ids;
  for (const auto& u : sorted) ids.push_back(u.client_id);
  const EmbeddingCube cube = embed_uploads(spec, sorted, inspection);
  return decide(sorted, global, score_models(cube, ids, options));
}

DefenseOutcome eminspector_knowledge_adjusted(const core::EncoderSpec& spec,
                                              std::span<const protocol::UploadedModel> updates,
                                              const data::InspectionSet& inspection,
                                              const core::ParameterVector& global,
                                              double estimated_fraction, double fluctuation) {
  const double q = estimated_fraction + fluctuation;
  if (!(q > 0.0 && q < 0.5) || estimated_fraction < 0.0 || fluctuation < 0.0) {
    throw ConfigError("estimated fraction + fluctuation must lie in (0, 0.5)");
  }
  return eminspector(spec, updates, inspection, global, {BoundaryRule::kMaxMeanMedian, q});
}

}  // namespace fssl::defense
