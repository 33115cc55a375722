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

#include "fssl/core/losses.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fssl/core/error.h"
#include "fssl/core/similarity.h"

namespace fssl::core {

namespace {

// Returns the normalized rows and their original norms.
Tensor normalize_rows(const Tensor& x, std::vector<double>& norms) {
  Tensor z = x;
  norms.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    norms[i] = l2_norm(x.row(i));
    if (norms[i] == 0.0) throw ZeroNormError("zero embedding in NT-Xent");
    for (double& v : z.row(i)) v /= norms[i];
  }
  return z;
}

void softmax(std::span<const double> x, std::span<double> out) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (out[i] = std::exp(x[i] - m));
  for (double& v : out) v /= s;
}

}  // namespace

PairLoss ntxent_loss(const Tensor& a, const Tensor& b, double temperature) {
  if (a.shape() != b.shape() || a.rank() != 2) {
    throw ShapeError("ntxent views must share a [B, d] shape");
  }
  if (a.rows() < 2) throw std::invalid_argument("ntxent needs at least two pairs");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const std::size_t half = a.rows();
  const std::size_t n = 2 * half;
  const std::size_t d = a.dim(1);
  const Tensor* parts[] = {&a, &b};
  std::vector<double> norms;
  const Tensor z = normalize_rows(concat_rows(parts), norms);

  // coeff(i, k) = dL/dS_ik where S_ik = z_i . z_k / T.
  std::vector<double> coeff(n * n, 0.0);
  std::vector<double> logits(n), probs(n);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pos = (i + half) % n;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      logits[k] = dot(z.row(i), z.row(k)) / temperature;
      m = std::max(m, logits[k]);
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) denom += std::exp(logits[k] - m);
    }
    loss += -(logits[pos] - m) + std::log(denom);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double p = std::exp(logits[k] - m) / denom;
      coeff[i * n + k] = inv_n * (p - (k == pos ? 1.0 : 0.0));
    }
  }
  loss *= inv_n;

  Tensor gz({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    auto gi = gz.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double c = (coeff[i * n + k] + coeff[k * n + i]) / temperature;
      auto zk = z.row(k);
      for (std::size_t j = 0; j < d; ++j) gi[j] += c * zk[j];
    }
  }
  PairLoss out{loss, Tensor({half, d}), Tensor({half, d})};
  for (std::size_t i = 0; i < n; ++i) {
    auto zi = z.row(i);
    auto gi = gz.row(i);
    const double proj = dot(zi, gi);
    auto dst = i < half ? out.grad_a.row(i) : out.grad_b.row(i - half);
    for (std::size_t j = 0; j < d; ++j) dst[j] = (gi[j] - zi[j] * proj) / norms[i];
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite NT-Xent loss");
  return out;
}

std::string to_string(SimilarityCriterion c) {
  switch (c) {
    case SimilarityCriterion::kCosine: return "cosine";
    case SimilarityCriterion::kMse: return "mse";
    case SimilarityCriterion::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

SimilarityCriterion parse_criterion(const std::string& name) {
  if (name == "cosine") return SimilarityCriterion::kCosine;
  if (name == "mse") return SimilarityCriterion::kMse;
  if (name == "cross_entropy") return SimilarityCriterion::kCrossEntropy;
  throw ConfigError("unknown similarity criterion '" + name + "'");
}

Dissimilarity dissimilarity(std::span<const double> a, std::span<const double> b,
                            SimilarityCriterion criterion) {
  const std::size_t d = a.size();
  if (b.size() != d || d == 0) throw ShapeError("dissimilarity length mismatch");
  Dissimilarity out{0.0, std::vector<double>(d), std::vector<double>(d)};
  switch (criterion) {
    case SimilarityCriterion::kCosine: {
      const double na = l2_norm(a);
      const double nb = l2_norm(b);
      if (na == 0.0 || nb == 0.0) throw ZeroNormError("zero embedding in backdoor loss");
      const double c = dot(a, b) / (na * nb);
      out.value = -c;
      for (std::size_t j = 0; j < d; ++j) {
        out.grad_a[j] = -(b[j] / nb - c * a[j] / na) / na;
        out.grad_b[j] = -(a[j] / na - c * b[j] / nb) / nb;
      }
      break;
    }
    case SimilarityCriterion::kMse: {
      const double inv_d = 1.0 / static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        out.value += diff * diff * inv_d;
        out.grad_a[j] = 2.0 * diff * inv_d;
        out.grad_b[j] = -2.0 * diff * inv_d;
      }
      break;
    }
    case SimilarityCriterion::kCrossEntropy: {
      std::vector<double> q(d), p(d), log_q(d);
      softmax(a, q);
      softmax(b, p);
      for (std::size_t j = 0; j < d; ++j) log_q[j] = std::log(q[j]);
      double expected = 0.0;
      for (std::size_t j = 0; j < d; ++j) expected += p[j] * log_q[j];
      out.value = -expected;
      for (std::size_t j = 0; j < d; ++j) {
        out.grad_a[j] = q[j] - p[j];
        out.grad_b[j] = -p[j] * (log_q[j] - expected);
      }
      break;
    }
  }
  return out;
}

ObjectiveResult contrastive_objective(const EncoderSpec& spec, const ParameterVector& params,
                                      const Tensor& view_a, const Tensor& view_b,
                                      double temperature, BnMode mode) {
  const Tensor* parts[] = {&view_a, &view_b};
  const Tensor batch = concat_rows(parts);
  ObjectiveResult result;
  const Tensor emb = forward(spec, params, batch, mode, &result.trace);
  const std::size_t half = view_a.rows();
  const std::size_t d = spec.embedding_dim();
  Tensor ea({half, d}), eb({half, d});
  std::copy_n(emb.data(), half * d, ea.data());
  std::copy_n(emb.data() + half * d, half * d, eb.data());
  PairLoss pl = ntxent_loss(ea, eb, temperature);
  const Tensor* grads[] = {&pl.grad_a, &pl.grad_b};
  result.loss = pl.loss;
  result.gradient = backward(spec, params, result.trace, concat_rows(grads));
  return result;
}

BackdoorLoss backdoor_loss(const EncoderSpec& spec, const ParameterVector& params,
                           const BackdoorBatch& batch, const BackdoorWeights& w,
                           bool bn_frozen) {
  if (!batch.clean || !batch.triggered || !batch.reference || !batch.clean_anchor) {
    throw std::invalid_argument("backdoor batch is incomplete");
  }
  const std::size_t count = batch.clean->rows();
  if (count == 0) throw std::invalid_argument("empty backdoor batch");
  if (batch.triggered->shape() != batch.clean->shape() || batch.reference->rows() != 1 ||
      batch.clean_anchor->rows() != count) {
    throw ShapeError("backdoor batch parts disagree in shape");
  }
  if (w.lambda1 < 0.0 || w.lambda2 < 0.0 || (w.lambda1 == 0.0 && w.lambda2 == 0.0)) {
    throw std::invalid_argument("attack weights must be non-negative and not both zero");
  }
  const std::size_t d = spec.embedding_dim();
  if (batch.reference_anchor.size() != d || batch.clean_anchor->row_size() != d) {
    throw ShapeError("anchor embeddings do not match embedding_dim");
  }
  const Tensor* parts[] = {batch.triggered, batch.clean, batch.reference};
  const Tensor input = concat_rows(parts);
  BackdoorLoss out;
  const BnMode mode = bn_frozen ? BnMode::kRunningStatistics : BnMode::kBatchStatistics;
  const Tensor emb = forward(spec, params, input, mode, &out.trace);

  Tensor grad({2 * count + 1, d});
  const double inv = 1.0 / static_cast<double>(count);
  const std::size_t ref_row = 2 * count;
  auto ref = emb.row(ref_row);
  auto g_ref = grad.row(ref_row);
  double hijack = 0.0;
  double utility = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const Dissimilarity t = dissimilarity(emb.row(i), ref, w.criterion);
    hijack += t.value * inv;
    auto gt = grad.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      gt[j] += w.lambda1 * inv * t.grad_a[j];
      g_ref[j] += w.lambda1 * inv * t.grad_b[j];
    }
    const Dissimilarity c = dissimilarity(emb.row(count + i), batch.clean_anchor->row(i),
                                          w.criterion);
    utility += c.value * inv;
    auto gc = grad.row(count + i);
    for (std::size_t j = 0; j < d; ++j) gc[j] += w.lambda2 * inv * c.grad_a[j];
  }
  const Dissimilarity r = dissimilarity(ref, batch.reference_anchor, w.criterion);
  hijack += r.value;
  for (std::size_t j = 0; j < d; ++j) g_ref[j] += w.lambda1 * r.grad_a[j];

  out.hijack = hijack;
  out.utility = utility;
  out.total = w.lambda1 * hijack + w.lambda2 * utility;
  if (!std::isfinite(out.total)) throw NumericError("non-finite backdoor loss");
  out.gradient = backward(spec, params, out.trace, grad);
  if (bn_frozen) mask_batchnorm(out.gradient);
  return out;
}

}  // namespace fssl::core
