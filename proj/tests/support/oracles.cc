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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fssl::testing {

double uniform(Rng& rng, double lo, double hi) {
  // 53 random bits mapped to [0, 1); avoids distribution implementation details.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double gaussian(Rng& rng) {
  const double u1 = uniform(rng, 1e-300, 1.0);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

Vec random_vector(Rng& rng, std::size_t dim, double scale) {
  Vec v(dim);
  for (double& x : v) x = scale * uniform(rng, -1.0, 1.0);
  return v;
}

Vec random_unit(Rng& rng, std::size_t dim) {
  Vec v(dim);
  double n = 0.0;
  do {
    n = 0.0;
    for (double& x : v) {
      x = gaussian(rng);
      n += x * x;
    }
  } while (n < 1e-12);
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

core::Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo, double hi) {
  core::Tensor t(std::move(shape));
  for (double& x : t.values()) x = uniform(rng, lo, hi);
  return t;
}

std::vector<protocol::UploadedModel> random_uploads(Rng& rng, std::size_t count, std::size_t dim,
                                                    bool shuffle_ids) {
  std::vector<std::size_t> ids(count);
  std::iota(ids.begin(), ids.end(), 0);
  if (shuffle_ids) {
    for (std::size_t i = count; i > 1; --i) std::swap(ids[i - 1], ids[uniform_index(rng, 0, i - 1)]);
  }
  std::vector<protocol::UploadedModel> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({ids[i], core::ParameterVector::from_values(random_vector(rng, dim, 3.0)),
                   uniform_index(rng, 1, 50)});
  }
  return out;
}

Vec oracle_fedavg(const std::vector<protocol::UploadedModel>& ups) {
  double total = 0.0;
  for (const auto& u : ups) total += static_cast<double>(u.data_size);
  Vec out(ups.front().params.size(), 0.0);
  for (const auto& u : ups) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += static_cast<double>(u.data_size) * u.params[i] / total;
    }
  }
  return out;
}

std::size_t oracle_krum(const std::vector<protocol::UploadedModel>& ups, std::size_t c) {
  const std::size_t n = ups.size();
  const std::size_t m = n - c - 2;
  double best = INFINITY;
  std::size_t best_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Vec d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < ups[i].params.size(); ++k) {
        const double diff = ups[i].params[k] - ups[j].params[k];
        s += diff * diff;
      }
      d.push_back(s);
    }
    std::sort(d.begin(), d.end());
    double score = 0.0;
    for (std::size_t j = 0; j < m; ++j) score += d[j];
    if (score < best || (score == best && ups[i].client_id < best_id)) {
      best = score;
      best_id = ups[i].client_id;
    }
  }
  return best_id;
}

Vec oracle_trimmed_mean(const std::vector<protocol::UploadedModel>& ups, std::size_t k) {
  Vec out(ups.front().params.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Vec col;
    for (const auto& u : ups) col.push_back(u.params[i]);
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (std::size_t j = k; j < col.size() - k; ++j) s += col[j];
    out[i] = s / static_cast<double>(col.size() - 2 * k);
  }
  return out;
}

Vec oracle_fltrust(const std::vector<protocol::UploadedModel>& ups, const Vec& server,
                   const Vec& global) {
  const std::size_t d = global.size();
  Vec ds(d);
  for (std::size_t k = 0; k < d; ++k) ds[k] = server[k] - global[k];
  double ns = 0.0;
  for (double x : ds) ns += x * x;
  ns = std::sqrt(ns);
  Vec sum(d, 0.0);
  double trust_total = 0.0;
  for (const auto& u : ups) {
    Vec di(d);
    double ni = 0.0, dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      di[k] = u.params[k] - global[k];
      ni += di[k] * di[k];
      dot += di[k] * ds[k];
    }
    ni = std::sqrt(ni);
    if (ni == 0.0 || ns == 0.0) continue;
    const double trust = std::max(0.0, dot / (ni * ns));
    trust_total += trust;
    for (std::size_t k = 0; k < d; ++k) sum[k] += trust * di[k] * ns / ni;
  }
  if (trust_total == 0.0) return {};
  Vec out(d);
  for (std::size_t k = 0; k < d; ++k) out[k] = global[k] + sum[k] / trust_total;
  return out;
}

double oracle_cosine(const Vec& a, const Vec& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

double oracle_accumulated(const RawCube& cube, std::size_t item, std::size_t model) {
  double s = 0.0;
  for (std::size_t j = 0; j < cube.size(); ++j) {
    if (j != model) s += oracle_cosine(cube[model][item], cube[j][item]);
  }
  return s;
}

double oracle_median(Vec v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double oracle_boundary(const Vec& ds, bool mean_only) {
  const double mean = std::accumulate(ds.begin(), ds.end(), 0.0) / static_cast<double>(ds.size());
  return mean_only ? mean : std::max(mean, oracle_median(ds));
}

namespace {

OracleScores finish(const std::map<std::size_t, int>& scores) {
  OracleScores out;
  out.scores = scores;
  for (const auto& [id, s] : scores) {
    if (s > 0) out.flagged.insert(id);
  }
  return out;
}

}  // namespace

OracleScores oracle_eminspector(const RawCube& cube, const std::vector<std::size_t>& ids,
                                bool mean_only) {
  std::map<std::size_t, int> scores;
  for (std::size_t id : ids) scores[id] = 0;
  const std::size_t items = cube.front().size();
  for (std::size_t x = 0; x < items; ++x) {
    Vec ds;
    for (std::size_t m = 0; m < cube.size(); ++m) ds.push_back(oracle_accumulated(cube, x, m));
    const double b = oracle_boundary(ds, mean_only);
    for (std::size_t m = 0; m < cube.size(); ++m) scores[ids[m]] += ds[m] >= b ? 1 : -1;
  }
  return finish(scores);
}

OracleScores oracle_top_fraction(const RawCube& cube, const std::vector<std::size_t>& ids,
                                 std::size_t top) {
  std::map<std::size_t, int> scores;
  for (std::size_t id : ids) scores[id] = 0;
  const std::size_t items = cube.front().size();
  for (std::size_t x = 0; x < items; ++x) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t m = 0; m < cube.size(); ++m) {
      ranked.push_back({-oracle_accumulated(cube, x, m), ids[m]});
    }
    std::sort(ranked.begin(), ranked.end());
    std::set<std::size_t> plus;
    for (std::size_t r = 0; r < top; ++r) plus.insert(ranked[r].second);
    for (std::size_t id : ids) scores[id] += plus.contains(id) ? 1 : -1;
  }
  return finish(scores);
}

RawCube clustered_cube(Rng& rng, std::size_t models, const std::set<std::size_t>& colluders,
                       std::size_t items, std::size_t dim, double eps) {
  RawCube cube(models, std::vector<Vec>(items));
  for (std::size_t x = 0; x < items; ++x) {
    const Vec attractor = random_unit(rng, dim);
    for (std::size_t m = 0; m < models; ++m) {
      if (colluders.contains(m)) {
        Vec v = attractor;
        for (double& c : v) c += eps * gaussian(rng);
        cube[m][x] = v;
      } else {
        cube[m][x] = random_unit(rng, dim);
      }
    }
  }
  return cube;
}

double oracle_ntxent(const std::vector<Vec>& a, const std::vector<Vec>& b, double temperature) {
  std::vector<Vec> z(a);
  z.insert(z.end(), b.begin(), b.end());
  const std::size_t n = z.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pos = i < a.size() ? i + a.size() : i - a.size();
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) denom += std::exp(oracle_cosine(z[i], z[k]) / temperature);
    }
    total += -std::log(std::exp(oracle_cosine(z[i], z[pos]) / temperature) / denom);
  }
  return total / static_cast<double>(n);
}

Vec finite_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(const Vec& a, const Vec& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

Vec to_vec(const core::ParameterVector& p) { return Vec(p.values().begin(), p.values().end()); }
Vec to_vec(const core::Tensor& t) { return Vec(t.values().begin(), t.values().end()); }

}  // namespace fssl::testing
