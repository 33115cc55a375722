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

#include "fssl/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fssl/core/error.h"
#include "fssl/core/linalg.h"
#include "fssl/core/similarity.h"

namespace fssl::eval {

using core::Tensor;

ProbeSplit split_probe(const data::Dataset& ds, double fraction, std::uint64_t seed) {
  if (!ds.has_labels()) throw ConfigError("probe split needs labels");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("probe fraction must be in (0, 1)");
  Rng rng(derive_seed(seed, Stream::kProbe));
  std::vector<int> labels(ds.labels);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<std::size_t> pool, memory, test;
  for (int l : labels) {
    std::vector<std::size_t> idx = ds.indices_of(l);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(std::lround(fraction * idx.size()));
    if (take < 2) throw ConfigError("probe split leaves a class without memory or test items");
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i >= take) {
        pool.push_back(idx[i]);
      } else if (i % 2 == 0) {
        memory.push_back(idx[i]);
      } else {
        test.push_back(idx[i]);
      }
    }
  }
  for (auto* v : {&pool, &memory, &test}) std::sort(v->begin(), v->end());
  return {ds.subset(pool), ds.subset(memory), ds.subset(test)};
}

Tensor embed_normalized(const core::EncoderState& state, const Tensor& images) {
  constexpr std::size_t kChunk = 256;
  const std::size_t n = images.rows();
  const std::size_t d = state.spec->embedding_dim();
  Tensor out({n, d});
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t count = std::min(kChunk, n - start);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor emb = core::forward(state, images.gather_rows(idx));
    std::copy(emb.values().begin(), emb.values().end(), out.row(start).begin());
  }
  for (std::size_t i = 0; i < n; ++i) core::l2_normalize(out.row(i));
  return out;
}

std::vector<int> knn_predict(const Tensor& memory, std::span<const int> memory_labels,
                             const Tensor& queries, std::size_t k, double temperature) {
  if (memory.rows() == 0 || queries.rows() == 0) throw std::invalid_argument("empty kNN split");
  if (memory_labels.size() != memory.rows()) throw ShapeError("kNN labels do not match memory");
  if (k == 0) throw std::invalid_argument("kNN needs k >= 1");
  const std::size_t kk = std::min(k, memory.rows());
  const int max_label = *std::max_element(memory_labels.begin(), memory_labels.end());
  std::vector<int> out(queries.rows());
  std::vector<std::pair<double, std::size_t>> sims(memory.rows());
  std::vector<double> votes(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t m = 0; m < memory.rows(); ++m) {
      sims[m] = {core::dot(queries.row(q), memory.row(m)), m};
    }
    std::partial_sort(sims.begin(), sims.begin() + static_cast<long>(kk), sims.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::fill(votes.begin(), votes.end(), 0.0);
    for (std::size_t j = 0; j < kk; ++j) {
      votes[static_cast<std::size_t>(memory_labels[sims[j].second])] +=
          std::exp(sims[j].first / temperature);
    }
    out[q] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

namespace {

double accuracy_on(const Tensor& mem, const EvalPlan& plan, const core::EncoderState& state) {
  const Tensor q = embed_normalized(state, plan.test.images);
  const auto pred = knn_predict(mem, plan.memory.labels, q, plan.knn_k, plan.knn_temperature);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == plan.test.labels[i];
  return 100.0 * static_cast<double>(hit) / static_cast<double>(pred.size());
}

double asr_on(const Tensor& mem, const EvalPlan& plan, const core::EncoderState& state) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < plan.test.size(); ++i) {
    if (plan.test.labels[i] != plan.target_class) idx.push_back(i);
  }
  if (idx.empty()) throw std::invalid_argument("ASR needs non-target test images");
  const Tensor triggered = data::embed_trigger(plan.test.images.gather_rows(idx), plan.trigger);
  const Tensor q = embed_normalized(state, triggered);
  const auto pred = knn_predict(mem, plan.memory.labels, q, plan.knn_k, plan.knn_temperature);
  const auto hit = std::count(pred.begin(), pred.end(), plan.target_class);
  return 100.0 * static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace

double knn_acc(const core::EncoderState& state, const EvalPlan& plan) {
  return accuracy_on(embed_normalized(state, plan.memory.images), plan, state);
}

double asr(const core::EncoderState& state, const EvalPlan& plan) {
  return asr_on(embed_normalized(state, plan.memory.images), plan, state);
}

AccAsr measure(const core::EncoderState& state, const EvalPlan& plan) {
  const Tensor mem = embed_normalized(state, plan.memory.images);
  return {accuracy_on(mem, plan, state), asr_on(mem, plan, state)};
}

double target_gap(const core::EncoderState& state, const data::Dataset& gap_set,
                  int target_class) {
  const Tensor emb = embed_normalized(state, gap_set.images);
  std::vector<std::size_t> targets, others;
  for (std::size_t i = 0; i < gap_set.size(); ++i) {
    (gap_set.labels[i] == target_class ? targets : others).push_back(i);
  }
  if (targets.empty() || others.empty()) {
    throw std::invalid_argument("gap set needs target and non-target images");
  }
  double g = 0.0;
  for (std::size_t x : others) {
    for (std::size_t t : targets) g += core::dot(emb.row(x), emb.row(t));
  }
  return g;
}

double gap_relative_error(double g_clean, double g_backdoored) {
  if (g_clean == 0.0) throw NumericError("gap relative error with g_c == 0");
  return (g_backdoored - g_clean) / g_clean * 100.0;
}

double gap_relative_error(const core::EncoderState& clean, const core::EncoderState& backdoored,
                          const data::Dataset& gap_set, int target_class) {
  return gap_relative_error(target_gap(clean, gap_set, target_class),
                            target_gap(backdoored, gap_set, target_class));
}

DetectionStats detection_stats(std::span<const std::size_t> participants,
                               const std::set<std::size_t>& flagged,
                               const std::map<std::size_t, int>& scores,
                               const std::set<std::size_t>& truth) {
  std::size_t benign = 0, malicious = 0, fp = 0, tp = 0;
  double benign_score = 0.0, malicious_score = 0.0;
  bool scored = !scores.empty();
  for (std::size_t id : participants) {
    const bool bad = truth.contains(id);
    const bool hit = flagged.contains(id);
    double s = 0.0;
    if (scored) {
      auto it = scores.find(id);
      if (it == scores.end()) {
        scored = false;
      } else {
        s = it->second;
      }
    }
    if (bad) {
      ++malicious;
      tp += hit;
      malicious_score += s;
    } else {
      ++benign;
      fp += hit;
      benign_score += s;
    }
  }
  DetectionStats st;
  if (benign > 0) st.fpr = static_cast<double>(fp) / static_cast<double>(benign);
  if (malicious > 0) st.tpr = static_cast<double>(tp) / static_cast<double>(malicious);
  if (scored && benign > 0) st.benign_mean_score = benign_score / static_cast<double>(benign);
  if (scored && malicious > 0) {
    st.malicious_mean_score = malicious_score / static_cast<double>(malicious);
  }
  return st;
}

std::vector<ProjectedPoint> export_embedding_projection(std::span<const ProjectionInput> encoders,
                                                        const Tensor& input, std::size_t* rank) {
  if (encoders.size() < 3) throw std::invalid_argument("projection needs at least 3 encoders");
  Tensor batch = input;
  if (batch.rank() == 3) {
    std::vector<std::size_t> shape{1};
    shape.insert(shape.end(), input.shape().begin(), input.shape().end());
    batch.reshape(shape);
  }
  if (batch.rows() != 1) throw ShapeError("projection expects a single input");
  const std::size_t d = encoders.front().encoder->spec->embedding_dim();
  core::Matrix m{encoders.size(), d, std::vector<double>(encoders.size() * d)};
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    const Tensor e = embed_normalized(*encoders[i].encoder, batch);
    std::copy(e.values().begin(), e.values().end(), m.row(i));
  }
  core::center_columns(m);
  const core::PrincipalComponents pc = core::principal_components(m, 2, 0x9C0FFEE);
  if (rank) *rank = pc.rank;
  std::vector<ProjectedPoint> out;
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    out.push_back({pc.scores.row(i)[0], pc.scores.row(i)[1], encoders[i].tag,
                   encoders[i].client_id});
  }
  return out;
}

std::string format_projection(std::span<const ProjectedPoint> points) {
  std::ostringstream os;
  os << "x y tag client_id\n" << std::setprecision(10);
  for (const auto& p : points) os << p.x << ' ' << p.y << ' ' << p.tag << ' ' << p.client_id << '\n';
  return os.str();
}

}  // namespace fssl::eval
