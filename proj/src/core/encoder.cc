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

#include "fssl/core/encoder.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"

namespace fssl::core {

namespace {

constexpr double kBnEpsilon = 1e-5;

Shape3 output_shape(const LayerSpec& l, const Shape3& in, std::size_t index) {
  auto fail = [&](const std::string& why) {
    throw ShapeError("layer " + std::to_string(index) + " (" + to_string(l.kind) +
                     "): " + why);
  };
  switch (l.kind) {
    case LayerKind::kConv: {
      if (l.units == 0 || l.kernel == 0 || l.stride == 0) fail("zero hyperparameter");
      const std::size_t ph = in.height + 2 * l.padding;
      const std::size_t pw = in.width + 2 * l.padding;
      if (ph < l.kernel || pw < l.kernel) fail("kernel larger than padded input");
      return {(ph - l.kernel) / l.stride + 1, (pw - l.kernel) / l.stride + 1, l.units};
    }
    case LayerKind::kDense:
      if (l.units == 0) fail("zero units");
      return {1, 1, l.units};
    case LayerKind::kPool:
      if (l.kernel == 0 || in.height % l.kernel || in.width % l.kernel) {
        fail("pool window must divide the spatial size");
      }
      return {in.height / l.kernel, in.width / l.kernel, in.channels};
    case LayerKind::kFlatten:
      return {1, 1, in.size()};
    case LayerKind::kBatchNorm:
    case LayerKind::kRelu:
      return in;
  }
  fail("unknown kind");
  return in;
}

void check_finite(const Tensor& t, std::size_t layer) {
  if (!t.all_finite()) {
    throw NumericError("non-finite activation after layer " + std::to_string(layer));
  }
}

// y[n, oy, ox, oc] = b[oc] + sum W[oc, ky, kx, ic] x[n, oy*s+ky-p, ox*s+kx-p, ic]
Tensor conv_forward(const Tensor& x, const Shape3& in, const Shape3& out,
                    const LayerSpec& l, std::span<const double> w,
                    std::span<const double> b) {
  const std::size_t batch = x.dim(0);
  Tensor y({batch, out.height, out.width, out.channels});
  const std::size_t k = l.kernel;
  const std::size_t ic_n = in.channels;
  const long pad = static_cast<long>(l.padding);
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xn = x.data() + n * in.size();
    double* yn = y.data() + n * out.size();
    for (std::size_t oy = 0; oy < out.height; ++oy) {
      for (std::size_t ox = 0; ox < out.width; ++ox) {
        double* yp = yn + (oy * out.width + ox) * out.channels;
        for (std::size_t oc = 0; oc < out.channels; ++oc) yp[oc] = b[oc];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const long iy = static_cast<long>(oy * l.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(in.height)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const long ix = static_cast<long>(ox * l.stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<long>(in.width)) continue;
            const double* xp = xn + (iy * in.width + ix) * ic_n;
            for (std::size_t oc = 0; oc < out.channels; ++oc) {
              const double* wp = w.data() + ((oc * k + ky) * k + kx) * ic_n;
              double acc = 0.0;
              for (std::size_t ic = 0; ic < ic_n; ++ic) acc += wp[ic] * xp[ic];
              yp[oc] += acc;
            }
          }
        }
      }
    }
  }
  return y;
}

void conv_backward(const Tensor& x, const Tensor& gy, const Shape3& in,
                   const Shape3& out, const LayerSpec& l, std::span<const double> w,
                   std::span<double> gw, std::span<double> gb, Tensor* gx) {
  const std::size_t batch = x.dim(0);
  const std::size_t k = l.kernel;
  const std::size_t ic_n = in.channels;
  const long pad = static_cast<long>(l.padding);
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xn = x.data() + n * in.size();
    const double* gyn = gy.data() + n * out.size();
    double* gxn = gx ? gx->data() + n * in.size() : nullptr;
    for (std::size_t oy = 0; oy < out.height; ++oy) {
      for (std::size_t ox = 0; ox < out.width; ++ox) {
        const double* gp = gyn + (oy * out.width + ox) * out.channels;
        for (std::size_t oc = 0; oc < out.channels; ++oc) gb[oc] += gp[oc];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const long iy = static_cast<long>(oy * l.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(in.height)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const long ix = static_cast<long>(ox * l.stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<long>(in.width)) continue;
            const std::size_t xoff = (iy * in.width + ix) * ic_n;
            const double* xp = xn + xoff;
            for (std::size_t oc = 0; oc < out.channels; ++oc) {
              const double g = gp[oc];
              if (g == 0.0) continue;
              const std::size_t woff = ((oc * k + ky) * k + kx) * ic_n;
              double* gwp = gw.data() + woff;
              for (std::size_t ic = 0; ic < ic_n; ++ic) gwp[ic] += g * xp[ic];
              if (gxn) {
                const double* wp = w.data() + woff;
                double* gxp = gxn + xoff;
                for (std::size_t ic = 0; ic < ic_n; ++ic) gxp[ic] += g * wp[ic];
              }
            }
          }
        }
      }
    }
  }
}

Tensor dense_forward(const Tensor& x, std::size_t in_n, std::size_t out_n,
                     std::span<const double> w, std::span<const double> b) {
  const std::size_t batch = x.dim(0);
  Tensor y({batch, 1, 1, out_n});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xn = x.data() + n * in_n;
    double* yn = y.data() + n * out_n;
    for (std::size_t o = 0; o < out_n; ++o) {
      const double* wo = w.data() + o * in_n;
      double acc = b[o];
      for (std::size_t i = 0; i < in_n; ++i) acc += wo[i] * xn[i];
      yn[o] = acc;
    }
  }
  return y;
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kDense: return "dense";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kPool: return "pool";
    case LayerKind::kFlatten: return "flatten";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv(std::size_t channels, std::size_t kernel, std::size_t stride,
                          std::size_t padding) {
  return {LayerKind::kConv, channels, kernel, stride, padding};
}
LayerSpec LayerSpec::dense(std::size_t units) { return {LayerKind::kDense, units}; }
LayerSpec LayerSpec::batchnorm() { return {LayerKind::kBatchNorm}; }
LayerSpec LayerSpec::relu() { return {LayerKind::kRelu}; }
LayerSpec LayerSpec::pool(std::size_t window) {
  return {LayerKind::kPool, 0, window, window};
}
LayerSpec LayerSpec::flatten() { return {LayerKind::kFlatten}; }

EncoderSpec::EncoderSpec(Shape3 input, std::vector<LayerSpec> layers)
    : input_(input), layers_(std::move(layers)) {
  if (input_.size() == 0) throw ShapeError("empty input shape");
  if (layers_.empty()) throw ShapeError("encoder without layers");
  shapes_.push_back(input_);
  std::vector<Segment> segments;
  std::size_t offset = 0;
  auto add = [&](std::uint32_t layer, SegmentKind kind, std::size_t length) {
    segments.push_back({layer, kind, offset, length});
    offset += length;
  };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Shape3& in = shapes_.back();
    const LayerSpec& l = layers_[i];
    const Shape3 out = output_shape(l, in, i);
    const auto id = static_cast<std::uint32_t>(i);
    switch (l.kind) {
      case LayerKind::kConv:
        add(id, SegmentKind::kWeight, l.units * l.kernel * l.kernel * in.channels);
        add(id, SegmentKind::kBias, l.units);
        break;
      case LayerKind::kDense:
        add(id, SegmentKind::kWeight, l.units * in.size());
        add(id, SegmentKind::kBias, l.units);
        break;
      case LayerKind::kBatchNorm:
        add(id, SegmentKind::kBnGamma, in.channels);
        add(id, SegmentKind::kBnBeta, in.channels);
        add(id, SegmentKind::kBnRunningMean, in.channels);
        add(id, SegmentKind::kBnRunningVar, in.channels);
        break;
      default:
        break;
    }
    shapes_.push_back(out);
  }
  layout_ = std::make_shared<const ParameterLayout>(std::move(segments));
}

EncoderSpec EncoderSpec::desk_default(std::size_t channels, std::size_t side,
                                      std::size_t embedding_dim) {
  return EncoderSpec({side, side, channels},
                     {LayerSpec::conv(8, 3, 2, 1), LayerSpec::batchnorm(), LayerSpec::relu(),
                      LayerSpec::conv(16, 3, 2, 1), LayerSpec::batchnorm(), LayerSpec::relu(),
                      LayerSpec::flatten(), LayerSpec::dense(embedding_dim)});
}

EncoderSpec EncoderSpec::identity(Shape3 input) {
  return EncoderSpec(input, {LayerSpec::flatten(), LayerSpec::dense(input.size())});
}

EncoderSpec EncoderSpec::mlp(Shape3 input, std::size_t hidden, std::size_t embedding_dim) {
  return EncoderSpec(input, {LayerSpec::flatten(), LayerSpec::dense(hidden),
                             LayerSpec::relu(), LayerSpec::dense(embedding_dim)});
}

std::string EncoderSpec::canonical() const {
  std::ostringstream os;
  os << "in:" << input_.height << 'x' << input_.width << 'x' << input_.channels;
  for (const LayerSpec& l : layers_) {
    os << '|' << to_string(l.kind) << ':' << l.units << ',' << l.kernel << ',' << l.stride
       << ',' << l.padding;
  }
  return os.str();
}

std::uint64_t EncoderSpec::hash() const {
  // FNV-1a over the canonical text.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ParameterVector initialize_parameters(const EncoderSpec& spec, std::uint64_t seed) {
  ParameterVector params(spec.layout());
  Rng rng(seed);
  for (const Segment& s : spec.layout()->segments()) {
    auto values = params.segment(s);
    switch (s.kind) {
      case SegmentKind::kWeight: {
        const LayerSpec& l = spec.layers()[s.layer];
        const std::size_t fan_in = s.length / l.units;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : values) v = dist(rng);
        break;
      }
      case SegmentKind::kBnGamma:
      case SegmentKind::kBnRunningVar:
        std::fill(values.begin(), values.end(), 1.0);
        break;
      default:
        std::fill(values.begin(), values.end(), 0.0);
    }
  }
  return params;
}

ParameterVector identity_parameters(const EncoderSpec& spec) {
  ParameterVector params(spec.layout());
  for (const Segment& s : spec.layout()->segments()) {
    if (s.kind != SegmentKind::kWeight) continue;
    const LayerSpec& l = spec.layers()[s.layer];
    const std::size_t in = s.length / l.units;
    if (in != l.units) throw ShapeError("identity weights need a square dense layer");
    auto w = params.segment(s);
    for (std::size_t i = 0; i < in; ++i) w[i * in + i] = 1.0;
  }
  return params;
}

Tensor forward(const EncoderSpec& spec, const ParameterVector& params,
               const Tensor& batch, BnMode mode, ForwardTrace* trace) {
  if (params.layout() != *spec.layout()) {
    throw ShapeError("parameters do not match encoder layout");
  }
  const Shape3& in0 = spec.input_shape();
  if (batch.rank() < 2 || batch.rows() == 0 || batch.row_size() != in0.size()) {
    throw ShapeError("batch " + batch.shape_string() + " does not match encoder input " +
                     std::to_string(in0.height) + "x" + std::to_string(in0.width) + "x" +
                     std::to_string(in0.channels));
  }
  const std::size_t n_batch = batch.rows();
  Tensor x = batch;
  x.reshape({n_batch, in0.height, in0.width, in0.channels});
  if (trace) {
    trace->mode = mode;
    trace->batch = n_batch;
    trace->inputs.clear();
    trace->bn.assign(spec.layers().size(), BnCache{});
  }
  const ParameterLayout& layout = *spec.layout();
  for (std::size_t i = 0; i < spec.layers().size(); ++i) {
    const LayerSpec& l = spec.layers()[i];
    const Shape3& in = spec.layer_input(i);
    const Shape3& out = spec.layer_output(i);
    const auto id = static_cast<std::uint32_t>(i);
    if (trace) trace->inputs.push_back(x);
    Tensor y;
    switch (l.kind) {
      case LayerKind::kConv:
        y = conv_forward(x, in, out, l, params.segment(layout.find(id, SegmentKind::kWeight)),
                         params.segment(layout.find(id, SegmentKind::kBias)));
        break;
      case LayerKind::kDense:
        y = dense_forward(x, in.size(), out.size(),
                          params.segment(layout.find(id, SegmentKind::kWeight)),
                          params.segment(layout.find(id, SegmentKind::kBias)));
        break;
      case LayerKind::kBatchNorm: {
        const std::size_t c_n = in.channels;
        const std::size_t count = n_batch * in.height * in.width;
        auto gamma = params.segment(layout.find(id, SegmentKind::kBnGamma));
        auto beta = params.segment(layout.find(id, SegmentKind::kBnBeta));
        std::vector<double> mean(c_n, 0.0), var(c_n, 0.0);
        if (mode == BnMode::kBatchStatistics) {
          for (std::size_t e = 0; e < count; ++e) {
            for (std::size_t c = 0; c < c_n; ++c) mean[c] += x[e * c_n + c];
          }
          for (double& m : mean) m /= static_cast<double>(count);
          for (std::size_t e = 0; e < count; ++e) {
            for (std::size_t c = 0; c < c_n; ++c) {
              const double d = x[e * c_n + c] - mean[c];
              var[c] += d * d;
            }
          }
          for (double& v : var) v /= static_cast<double>(count);
        } else {
          auto rm = params.segment(layout.find(id, SegmentKind::kBnRunningMean));
          auto rv = params.segment(layout.find(id, SegmentKind::kBnRunningVar));
          std::copy(rm.begin(), rm.end(), mean.begin());
          std::copy(rv.begin(), rv.end(), var.begin());
        }
        std::vector<double> inv_std(c_n);
        for (std::size_t c = 0; c < c_n; ++c) {
          if (var[c] < 0.0) throw NumericError("negative BN variance");
          inv_std[c] = 1.0 / std::sqrt(var[c] + kBnEpsilon);
        }
        y = Tensor(x.shape());
        std::vector<double> normalized(trace ? x.size() : 0);
        for (std::size_t e = 0; e < count; ++e) {
          for (std::size_t c = 0; c < c_n; ++c) {
            const std::size_t k = e * c_n + c;
            const double xh = (x[k] - mean[c]) * inv_std[c];
            if (trace) normalized[k] = xh;
            y[k] = gamma[c] * xh + beta[c];
          }
        }
        if (trace) {
          trace->bn[i] = BnCache{std::move(mean), std::move(var), std::move(inv_std),
                                 std::move(normalized), count};
        }
        break;
      }
      case LayerKind::kRelu:
        y = x;
        for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::kPool: {
        const std::size_t k = l.kernel;
        y = Tensor({n_batch, out.height, out.width, out.channels});
        const double scale = 1.0 / static_cast<double>(k * k);
        for (std::size_t n = 0; n < n_batch; ++n) {
          for (std::size_t oy = 0; oy < out.height; ++oy) {
            for (std::size_t ox = 0; ox < out.width; ++ox) {
              for (std::size_t c = 0; c < out.channels; ++c) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < k; ++ky) {
                  for (std::size_t kx = 0; kx < k; ++kx) {
                    acc += x[((n * in.height + oy * k + ky) * in.width + ox * k + kx) *
                                 in.channels + c];
                  }
                }
                y[((n * out.height + oy) * out.width + ox) * out.channels + c] = acc * scale;
              }
            }
          }
        }
        break;
      }
      case LayerKind::kFlatten:
        y = x;
        y.reshape({n_batch, 1, 1, out.size()});
        break;
    }
    check_finite(y, i);
    x = std::move(y);
  }
  x.reshape({n_batch, spec.embedding_dim()});
  return x;
}

Tensor forward(const EncoderState& state, const Tensor& batch) {
  return forward(*state.spec, state.params, batch, BnMode::kRunningStatistics);
}

ParameterVector backward(const EncoderSpec& spec, const ParameterVector& params,
                         const ForwardTrace& trace, const Tensor& grad_output) {
  const std::size_t n_batch = trace.batch;
  if (trace.inputs.size() != spec.layers().size()) {
    throw ShapeError("forward trace does not match encoder");
  }
  if (grad_output.size() != n_batch * spec.embedding_dim()) {
    throw ShapeError("output gradient " + grad_output.shape_string() +
                     " does not match embeddings");
  }
  ParameterVector grad = params.zeros_like();
  const ParameterLayout& layout = *spec.layout();
  Tensor gy = grad_output;
  {
    const Shape3& last = spec.layer_output(spec.layers().size() - 1);
    gy.reshape({n_batch, last.height, last.width, last.channels});
  }
  for (std::size_t idx = spec.layers().size(); idx-- > 0;) {
    const LayerSpec& l = spec.layers()[idx];
    const Shape3& in = spec.layer_input(idx);
    const Shape3& out = spec.layer_output(idx);
    const Tensor& x = trace.inputs[idx];
    const auto id = static_cast<std::uint32_t>(idx);
    const bool need_input_grad = idx > 0;
    Tensor gx({n_batch, in.height, in.width, in.channels});
    switch (l.kind) {
      case LayerKind::kConv: {
        const Segment& ws = layout.find(id, SegmentKind::kWeight);
        const Segment& bs = layout.find(id, SegmentKind::kBias);
        conv_backward(x, gy, in, out, l, params.segment(ws), grad.segment(ws),
                      grad.segment(bs), need_input_grad ? &gx : nullptr);
        break;
      }
      case LayerKind::kDense: {
        const Segment& ws = layout.find(id, SegmentKind::kWeight);
        const Segment& bs = layout.find(id, SegmentKind::kBias);
        auto w = params.segment(ws);
        auto gw = grad.segment(ws);
        auto gb = grad.segment(bs);
        const std::size_t in_n = in.size();
        const std::size_t out_n = out.size();
        for (std::size_t n = 0; n < n_batch; ++n) {
          const double* xn = x.data() + n * in_n;
          const double* gyn = gy.data() + n * out_n;
          double* gxn = gx.data() + n * in_n;
          for (std::size_t o = 0; o < out_n; ++o) {
            const double g = gyn[o];
            gb[o] += g;
            if (g == 0.0) continue;
            double* gwo = gw.data() + o * in_n;
            const double* wo = w.data() + o * in_n;
            for (std::size_t i = 0; i < in_n; ++i) gwo[i] += g * xn[i];
            if (need_input_grad) {
              for (std::size_t i = 0; i < in_n; ++i) gxn[i] += g * wo[i];
            }
          }
        }
        break;
      }
      case LayerKind::kBatchNorm: {
        const BnCache& cache = trace.bn[idx];
        const std::size_t c_n = in.channels;
        const std::size_t count = cache.count;
        auto gamma = params.segment(layout.find(id, SegmentKind::kBnGamma));
        auto ggamma = grad.segment(layout.find(id, SegmentKind::kBnGamma));
        auto gbeta = grad.segment(layout.find(id, SegmentKind::kBnBeta));
        std::vector<double> sum_g(c_n, 0.0), sum_gx(c_n, 0.0);
        for (std::size_t e = 0; e < count; ++e) {
          for (std::size_t c = 0; c < c_n; ++c) {
            const std::size_t k = e * c_n + c;
            sum_g[c] += gy[k];
            sum_gx[c] += gy[k] * cache.normalized[k];
          }
        }
        for (std::size_t c = 0; c < c_n; ++c) {
          ggamma[c] += sum_gx[c];
          gbeta[c] += sum_g[c];
        }
        if (need_input_grad) {
          const double inv_count = 1.0 / static_cast<double>(count);
          for (std::size_t e = 0; e < count; ++e) {
            for (std::size_t c = 0; c < c_n; ++c) {
              const std::size_t k = e * c_n + c;
              const double scale = gamma[c] * cache.inv_std[c];
              if (trace.mode == BnMode::kBatchStatistics) {
                gx[k] = scale * (gy[k] - sum_g[c] * inv_count -
                                 cache.normalized[k] * sum_gx[c] * inv_count);
              } else {
                gx[k] = scale * gy[k];
              }
            }
          }
        }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t k = 0; k < gx.size(); ++k) gx[k] = x[k] > 0.0 ? gy[k] : 0.0;
        break;
      case LayerKind::kPool: {
        const std::size_t k = l.kernel;
        const double scale = 1.0 / static_cast<double>(k * k);
        for (std::size_t n = 0; n < n_batch; ++n) {
          for (std::size_t oy = 0; oy < out.height; ++oy) {
            for (std::size_t ox = 0; ox < out.width; ++ox) {
              for (std::size_t c = 0; c < out.channels; ++c) {
                const double g =
                    gy[((n * out.height + oy) * out.width + ox) * out.channels + c] * scale;
                for (std::size_t ky = 0; ky < k; ++ky) {
                  for (std::size_t kx = 0; kx < k; ++kx) {
                    gx[((n * in.height + oy * k + ky) * in.width + ox * k + kx) *
                           in.channels + c] = g;
                  }
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::kFlatten:
        gx = gy;
        gx.reshape({n_batch, in.height, in.width, in.channels});
        break;
    }
    gy = std::move(gx);
  }
  return grad;
}

void update_running_statistics(const EncoderSpec& spec, ParameterVector& params,
                               const ForwardTrace& trace, double momentum) {
  if (trace.mode != BnMode::kBatchStatistics) return;
  const ParameterLayout& layout = *spec.layout();
  for (std::size_t i = 0; i < spec.layers().size(); ++i) {
    if (spec.layers()[i].kind != LayerKind::kBatchNorm) continue;
    const auto id = static_cast<std::uint32_t>(i);
    const BnCache& cache = trace.bn.at(i);
    auto rm = params.segment(layout.find(id, SegmentKind::kBnRunningMean));
    auto rv = params.segment(layout.find(id, SegmentKind::kBnRunningVar));
    const double n = static_cast<double>(cache.count);
    const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
    for (std::size_t c = 0; c < rm.size(); ++c) {
      rm[c] = (1.0 - momentum) * rm[c] + momentum * cache.batch_mean[c];
      rv[c] = (1.0 - momentum) * rv[c] + momentum * cache.batch_var[c] * unbias;
    }
  }
}

void mask_batchnorm(ParameterVector& grad) {
  for (const Segment& s : grad.layout().segments()) {
    if (is_batchnorm(s.kind)) {
      auto g = grad.segment(s);
      std::fill(g.begin(), g.end(), 0.0);
    }
  }
}

}  // namespace fssl::core
