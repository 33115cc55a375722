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

#include "fssl/data/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "fssl/core/error.h"

namespace fssl::data {

using core::Tensor;

core::Shape3 Dataset::image_shape() const {
  if (images.rank() != 4) throw ShapeError("dataset images must be [N, H, W, C]");
  return {images.dim(1), images.dim(2), images.dim(3)};
}

std::vector<std::size_t> Dataset::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) out.push_back(i);
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{images.gather_rows(indices), {}};
  if (has_labels()) {
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  }
  return out;
}

void Dataset::validate() const {
  image_shape();
  if (has_labels() && labels.size() != size()) {
    throw std::invalid_argument("label count does not match image count");
  }
  for (double v : images.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("pixel outside [0, 1]");
  }
}

namespace {

// Smooth prototype: a few Gaussian blobs and one oriented grating, rescaled
// to [0.1, 0.9].
std::vector<double> make_prototype(const SynthesisConfig& c, std::size_t cls) {
  Rng rng(derive_seed(c.family, {0xC1A55, cls}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t h = c.height, w = c.width, ch = c.channels;
  std::vector<double> img(h * w * ch, 0.0);
  const double theta = std::numbers::pi * unit(rng);
  const double freq = 2.0 * std::numbers::pi * (1.0 + 2.0 * unit(rng)) /
                      static_cast<double>(std::max(h, w));
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  struct Blob {
    double y, x, r, a;
  };
  std::vector<Blob> blobs;
  for (int b = 0; b < 3; ++b) {
    blobs.push_back({unit(rng) * h, unit(rng) * w, 1.5 + 2.5 * unit(rng),
                     (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.6 + 0.6 * unit(rng))});
  }
  std::vector<double> tint(ch);
  for (double& t : tint) t = 0.6 + 0.4 * unit(rng);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0.5 * std::sin(freq * (std::cos(theta) * y + std::sin(theta) * x) + phase);
      for (const Blob& b : blobs) {
        const double dy = y - b.y, dx = x - b.x;
        v += b.a * std::exp(-(dy * dy + dx * dx) / (2.0 * b.r * b.r));
      }
      for (std::size_t k = 0; k < ch; ++k) img[(y * w + x) * ch + k] = v * tint[k];
    }
  }
  const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
  const double mn = *lo, span = std::max(*hi - *lo, 1e-9);
  for (double& v : img) v = 0.1 + 0.8 * (v - mn) / span;
  return img;
}

}  // namespace

Dataset synthesize_dataset(const SynthesisConfig& c, std::uint64_t seed) {
  if (c.classes < 2) throw ConfigError("synthesize_dataset needs at least 2 classes");
  if (c.per_class < 1) throw ConfigError("synthesize_dataset needs per_class >= 1");
  if (c.height == 0 || c.width == 0 || c.channels == 0) {
    throw ConfigError("synthesize_dataset image shape must be positive");
  }
  if (c.noise < 0.0 || c.contrast_jitter < 0.0) {
    throw ConfigError("synthesis nuisance amplitudes must be >= 0");
  }
  const std::size_t h = c.height, w = c.width, ch = c.channels;
  const std::size_t n = c.classes * c.per_class;
  Dataset ds{Tensor({n, h, w, ch}), std::vector<int>(n)};
  Rng rng(derive_seed(seed, Stream::kData, {c.family}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<long> shift(-static_cast<long>(c.max_shift),
                                            static_cast<long>(c.max_shift));
  std::uniform_real_distribution<double> contrast(-1.0, 1.0);
  std::size_t idx = 0;
  for (std::size_t cls = 0; cls < c.classes; ++cls) {
    const std::vector<double> proto = make_prototype(c, cls);
    for (std::size_t s = 0; s < c.per_class; ++s, ++idx) {
      ds.labels[idx] = static_cast<int>(cls);
      const long dy = c.max_shift ? shift(rng) : 0;
      const long dx = c.max_shift ? shift(rng) : 0;
      const double gain = 1.0 + c.contrast_jitter * contrast(rng);
      auto out = ds.images.row(idx);
      for (std::size_t y = 0; y < h; ++y) {
        const long sy = std::clamp<long>(static_cast<long>(y) - dy, 0, h - 1);
        for (std::size_t x = 0; x < w; ++x) {
          const long sx = std::clamp<long>(static_cast<long>(x) - dx, 0, w - 1);
          for (std::size_t k = 0; k < ch; ++k) {
            double v = 0.5 + gain * (proto[(sy * w + sx) * ch + k] - 0.5);
            if (c.noise > 0.0) v += c.noise * gauss(rng);
            out[(y * w + x) * ch + k] = std::clamp(v, 0.0, 1.0);
          }
        }
      }
    }
  }
  return ds;
}

namespace {
template <typename U>
void put(std::ostream& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}
template <typename U>
U get(std::istream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("truncated raw dataset");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<U>(v);
}
}  // namespace

void write_raw_dataset(const std::filesystem::path& path, const Dataset& ds) {
  ds.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write("FSDS", 4);
  const core::Shape3 s = ds.image_shape();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.channels));
  put<std::uint8_t>(out, ds.has_labels() ? 1 : 0);
  for (double v : ds.images.values()) {
    out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
  }
  for (int l : ds.labels) put<std::uint32_t>(out, static_cast<std::uint32_t>(l));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset read_raw_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "FSDS") throw std::runtime_error("bad raw dataset magic");
  const auto n = get<std::uint32_t>(in);
  const auto h = get<std::uint32_t>(in);
  const auto w = get<std::uint32_t>(in);
  const auto c = get<std::uint32_t>(in);
  const auto has_labels = get<std::uint8_t>(in);
  Dataset ds{Tensor({n, h, w, c}), {}};
  std::vector<unsigned char> bytes(ds.images.size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw std::runtime_error("truncated raw dataset pixels");
  for (std::size_t i = 0; i < bytes.size(); ++i) ds.images[i] = bytes[i] / 255.0;
  if (has_labels) {
    ds.labels.resize(n);
    for (int& l : ds.labels) l = static_cast<int>(get<std::uint32_t>(in));
  }
  ds.validate();
  return ds;
}

Tensor augment(const Tensor& batch, const AugmentConfig& cfg, Rng& rng) {
  if (batch.rank() != 4) throw ShapeError("augment expects [N, H, W, C]");
  const std::size_t n = batch.dim(0), h = batch.dim(1), w = batch.dim(2), ch = batch.dim(3);
  Tensor out(batch.shape());
  std::uniform_int_distribution<long> shift(-static_cast<long>(cfg.max_shift),
                                            static_cast<long>(cfg.max_shift));
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> bright(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const long dy = cfg.max_shift ? shift(rng) : 0;
    const long dx = cfg.max_shift ? shift(rng) : 0;
    const bool flip = cfg.flip && coin(rng);
    const double offset = cfg.brightness * bright(rng);
    auto src = batch.row(i);
    auto dst = out.row(i);
    for (std::size_t y = 0; y < h; ++y) {
      const long sy = static_cast<long>(y) - dy;
      for (std::size_t x = 0; x < w; ++x) {
        const long fx = flip ? static_cast<long>(w - 1 - x) : static_cast<long>(x);
        const long sx = fx - dx;
        const bool inside = sy >= 0 && sy < static_cast<long>(h) && sx >= 0 &&
                            sx < static_cast<long>(w);
        for (std::size_t k = 0; k < ch; ++k) {
          double v = inside ? src[(sy * w + sx) * ch + k] : 0.0;
          v += offset;
          if (cfg.noise > 0.0) v += cfg.noise * gauss(rng);
          dst[(y * w + x) * ch + k] = std::clamp(v, 0.0, 1.0);
        }
      }
    }
  }
  return out;
}

}  // namespace fssl::data
