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

#include "fssl/defense/robust.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fssl/core/error.h"
#include "fssl/core/linalg.h"
#include "fssl/core/rng.h"
#include "fssl/core/similarity.h"

namespace fssl::defense {

using core::ParameterVector;
using protocol::UploadedModel;

namespace {

void require_nonempty(std::span<const UploadedModel> updates, const char* who) {
  if (updates.empty()) throw std::invalid_argument(std::string(who) + " of an empty update set");
  for (const auto& u : updates) require_same_layout(updates.front().params, u.params, who);
}

}  // namespace

Selection krum(std::span<const UploadedModel> updates_in, std::size_t c) {
  require_nonempty(updates_in, "krum");
  const auto updates = sorted_by_client(updates_in);
  const std::size_t n = updates.size();
  if (n < c + 3) {
    throw std::invalid_argument("krum needs at least c + 3 updates (" + std::to_string(n) +
                                " given, c = " + std::to_string(c) + ")");
  }
  const std::size_t m = n - c - 2;
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] =
          core::squared_distance(updates[i].params.values(), updates[j].params.values());
    }
  }
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(dist[i * n + j]);
    }
    std::sort(row.begin(), row.end());
    const double score = std::accumulate(row.begin(), row.begin() + static_cast<long>(m), 0.0);
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return {updates[best].params, {updates[best].client_id}, false, ""};
}

ParameterVector trimmed_mean(std::span<const UploadedModel> updates, std::size_t k) {
  require_nonempty(updates, "trimmed_mean");
  const std::size_t n = updates.size();
  if (2 * k >= n) {
    throw std::invalid_argument("trimmed_mean needs more than 2k updates");
  }
  ParameterVector out = updates.front().params.zeros_like();
  std::vector<double> column(n);
  const double keep = static_cast<double>(n - 2 * k);
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t i = 0; i < n; ++i) column[i] = updates[i].params[p];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (std::size_t i = k; i < n - k; ++i) s += column[i];
    out[p] = s / keep;
  }
  return out;
}

Selection fltrust(std::span<const UploadedModel> updates_in, const ParameterVector& server,
                  const ParameterVector& global) {
  require_nonempty(updates_in, "fltrust");
  require_same_layout(server, global, "fltrust");
  require_same_layout(updates_in.front().params, global, "fltrust");
  const auto updates = sorted_by_client(updates_in);
  const ParameterVector ds = subtract(server, global);
  const double server_norm = core::l2_norm(ds.values());
  ParameterVector sum = global.zeros_like();
  double trust_total = 0.0;
  Selection out;
  for (const auto& u : updates) {
    const ParameterVector di = subtract(u.params, global);
    const double trust = std::max(0.0, core::cosine_similarity_or_zero(di.values(), ds.values()));
    if (trust <= 0.0) continue;
    const double scale = server_norm / core::l2_norm(di.values());
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += trust * scale * di[p];
    trust_total += trust;
    out.kept.push_back(u.client_id);
  }
  if (trust_total == 0.0) {
    out.aggregated = global;
    out.kept_previous = true;
    out.note = "all trust scores are zero; global model kept";
    return out;
  }
  out.aggregated = global;
  for (std::size_t p = 0; p < sum.size(); ++p) out.aggregated[p] += sum[p] / trust_total;
  return out;
}

std::vector<double> foolsgold_weights(std::span<const std::vector<double>> h) {
  const std::size_t n = h.size();
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  std::vector<double> cs(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      cs[i * n + j] = cs[j * n + i] = core::cosine_similarity_or_zero(h[i], h[j]);
    }
  }
  std::vector<double> v(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) v[i] = std::max(v[i], cs[i * n + j]);
    }
  }
  // Pardoning: scale down similarity to clients that look more suspicious.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && v[j] > v[i] && v[j] > 0.0) cs[i * n + j] *= v[i] / v[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) mx = std::max(mx, cs[i * n + j]);
    }
    w[i] = std::clamp(1.0 - mx, 0.0, 1.0);
  }
  const double top = *std::max_element(w.begin(), w.end());
  if (top == 0.0) return std::vector<double>(n, 0.0);
  for (double& x : w) {
    x /= top;
    if (x >= 1.0) x = 0.99;
    x = x <= 0.0 ? 0.0 : std::clamp(std::log(x / (1.0 - x)) + 0.5, 0.0, 1.0);
  }
  return w;
}

Selection FoolsGold::aggregate(std::span<const UploadedModel> updates_in,
                               const ParameterVector& global) {
  require_nonempty(updates_in, "foolsgold");
  const auto updates = sorted_by_client(updates_in);
  std::vector<ParameterVector> d;
  std::vector<std::vector<double>> histories;
  for (const auto& u : updates) {
    d.push_back(subtract(u.params, global));
    auto& h = history_[u.client_id];
    if (h.empty()) h.assign(global.size(), 0.0);
    for (std::size_t p = 0; p < h.size(); ++p) h[p] += d.back()[p];
    histories.push_back(h);
  }
  const std::vector<double> w = foolsgold_weights(histories);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  Selection out;
  if (total == 0.0) {
    out.aggregated = global;
    out.kept_previous = true;
    out.note = "all FoolsGold weights are zero; global model kept";
    return out;
  }
  out.aggregated = global;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    if (w[i] > 0.0) out.kept.push_back(updates[i].client_id);
    for (std::size_t p = 0; p < global.size(); ++p) out.aggregated[p] += w[i] / total * d[i][p];
  }
  return out;
}

std::vector<std::size_t> dominant_cluster(std::span<const std::vector<double>> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = 1.0 - core::cosine_similarity_or_zero(x[i], x[j]);
    }
  }
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), 0);
  const std::size_t majority = n / 2 + 1;
  auto largest = [&](const std::vector<std::size_t>& lab) {
    std::vector<std::size_t> count(n, 0);
    for (std::size_t l : lab) ++count[l];
    return static_cast<std::size_t>(std::max_element(count.begin(), count.end()) -
                                    count.begin());
  };
  auto members = [&](const std::vector<std::size_t>& lab, std::size_t l) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (lab[i] == l) out.push_back(i);
    }
    return out;
  };
  if (majority <= 1) return members(label, 0);
  // Full single-linkage merge sequence; snapshot after each merge.
  std::vector<double> heights;
  std::vector<std::vector<std::size_t>> snapshots;
  for (std::size_t merges = 0; merges + 1 < n; ++merges) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (label[i] != label[j] && dist[i * n + j] < best) {
          best = dist[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    const std::size_t from = std::max(label[bi], label[bj]);
    const std::size_t to = std::min(label[bi], label[bj]);
    for (std::size_t& l : label) {
      if (l == from) l = to;
    }
    heights.push_back(best);
    snapshots.push_back(label);
  }
  // Among cuts that leave a majority cluster, take the one before the widest
  // jump in merge height.
  std::size_t pick = snapshots.size() - 1;
  double widest_gap = -1.0;
  for (std::size_t k = 0; k + 1 < snapshots.size(); ++k) {
    const auto& lab = snapshots[k];
    if (members(lab, largest(lab)).size() < majority) continue;
    const double gap = heights[k + 1] - heights[k];
    if (gap > widest_gap) {
      widest_gap = gap;
      pick = k;
    }
  }
  return members(snapshots[pick], largest(snapshots[pick]));
}

Selection flame(std::span<const UploadedModel> updates_in, const ParameterVector& global,
                double noise, std::uint64_t seed) {
  require_nonempty(updates_in, "flame");
  const auto updates = sorted_by_client(updates_in);
  if (updates.size() < 3) throw std::invalid_argument("flame needs at least 3 updates");
  const std::vector<ParameterVector> d = deltas(updates, global);
  std::vector<std::vector<double>> raw;
  std::vector<double> norms;
  for (const auto& v : d) {
    raw.emplace_back(v.values().begin(), v.values().end());
    norms.push_back(core::l2_norm(v.values()));
  }
  std::vector<double> sorted_norms = norms;
  std::sort(sorted_norms.begin(), sorted_norms.end());
  const std::size_t n = norms.size();
  const double bound = n % 2 ? sorted_norms[n / 2]
                             : (sorted_norms[n / 2 - 1] + sorted_norms[n / 2]) / 2.0;
  const std::vector<std::size_t> keep = dominant_cluster(raw);
  Selection out;
  out.aggregated = global;
  std::vector<double> sum(global.size(), 0.0);
  for (std::size_t i : keep) {
    const double factor = norms[i] > bound ? bound / norms[i] : 1.0;
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += factor * d[i][p];
    out.kept.push_back(updates[i].client_id);
  }
  for (std::size_t p = 0; p < sum.size(); ++p) {
    out.aggregated[p] += sum[p] / static_cast<double>(keep.size());
  }
  if (noise > 0.0 && bound > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, noise * bound);
    for (const core::Segment& s : global.layout().segments()) {
      if (!core::is_trainable(s.kind)) continue;
      for (double& v : out.aggregated.segment(s)) v += gauss(rng);
    }
  }
  return out;
}

Selection rflbat(std::span<const UploadedModel> updates_in, const ParameterVector& global,
                 std::uint64_t seed) {
  require_nonempty(updates_in, "rflbat");
  const auto updates = sorted_by_client(updates_in);
  const std::size_t n = updates.size();
  if (n < 4) throw std::invalid_argument("rflbat needs at least 4 updates");
  const std::vector<ParameterVector> d = deltas(updates, global);
  core::Matrix m{n, global.size(), {}};
  for (const auto& v : d) m.values.insert(m.values.end(), v.values().begin(), v.values().end());
  core::center_columns(m);
  const core::PrincipalComponents pc = core::principal_components(m, 2, seed);
  Selection out;
  std::vector<std::size_t> keep;
  if (pc.rank == 0) {
    keep.resize(n);
    std::iota(keep.begin(), keep.end(), 0);
    out.note = "updates have no spread; all kept";
  } else {
    const core::KMeansResult km = core::kmeans(pc.scores, 2, seed ^ 0x4B4D);
    double spread[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = km.assignment[i];
      const double dx = pc.scores.row(i)[0] - km.centroids.row(c)[0];
      const double dy = pc.scores.row(i)[1] - km.centroids.row(c)[1];
      spread[c] += std::sqrt(dx * dx + dy * dy);
      ++count[c];
    }
    std::size_t chosen = 0;
    if (count[1] == 0) {
      chosen = 0;
    } else if (count[0] == 0) {
      chosen = 1;
    } else {
      const double a = spread[0] / static_cast<double>(count[0]);
      const double b = spread[1] / static_cast<double>(count[1]);
      if (count[0] != count[1]) {
        chosen = count[0] > count[1] ? 0 : 1;
      } else if (a != b) {
        chosen = a < b ? 0 : 1;
      } else {
        chosen = km.assignment[0];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (km.assignment[i] == chosen) keep.push_back(i);
    }
  }
  std::vector<UploadedModel> survivors;
  for (std::size_t i : keep) {
    survivors.push_back(updates[i]);
    out.kept.push_back(updates[i].client_id);
  }
  out.aggregated = protocol::fedavg(survivors);
  return out;
}

}  // namespace fssl::defense
