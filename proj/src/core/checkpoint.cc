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

#include "fssl/core/checkpoint.h"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "fssl/core/error.h"

namespace fssl::core {

namespace {

template <typename U>
void put(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(U));
}

template <typename U>
U get(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!in) throw std::runtime_error("truncated checkpoint");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const EncoderSpec& spec,
                      const ParameterVector& params, FloatWidth width) {
  if (params.layout() != *spec.layout()) {
    throw ShapeError("checkpoint parameters do not match the encoder layout");
  }
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, spec.hash());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(width));
  const auto& segments = params.layout().segments();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(segments.size()));
  for (const Segment& s : segments) {
    put<std::uint32_t>(out, s.layer);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(s.kind));
    put<std::uint64_t>(out, s.offset);
    put<std::uint64_t>(out, s.length);
  }
  put<std::uint64_t>(out, params.size());
  for (double v : params.values()) {
    if (width == FloatWidth::k64) {
      put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    } else {
      put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

ParameterVector read_checkpoint(std::istream& in, const EncoderSpec& spec,
                                CheckpointHeader* header_out) {
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), kCheckpointMagic)) {
    throw std::runtime_error("not a checkpoint (bad magic)");
  }
  CheckpointHeader h;
  h.version = get<std::uint32_t>(in);
  if (h.version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(h.version));
  }
  h.spec_hash = get<std::uint64_t>(in);
  if (h.spec_hash != spec.hash()) {
    throw std::runtime_error("checkpoint was written for a different encoder");
  }
  const auto width = get<std::uint32_t>(in);
  if (width != 4 && width != 8) throw std::runtime_error("bad checkpoint float width");
  h.width = static_cast<FloatWidth>(width);
  const auto n_segments = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_segments; ++i) {
    Segment s;
    s.layer = get<std::uint32_t>(in);
    const auto kind = get<std::uint8_t>(in);
    if (kind > static_cast<std::uint8_t>(SegmentKind::kBnRunningVar)) {
      throw std::runtime_error("bad segment kind in checkpoint");
    }
    s.kind = static_cast<SegmentKind>(kind);
    s.offset = get<std::uint64_t>(in);
    s.length = get<std::uint64_t>(in);
    h.segments.push_back(s);
  }
  if (h.segments != spec.layout()->segments()) {
    throw std::runtime_error("checkpoint segment table does not match the encoder");
  }
  h.value_count = get<std::uint64_t>(in);
  if (h.value_count != spec.layout()->total()) {
    throw std::runtime_error("checkpoint value count mismatch");
  }
  std::vector<double> values(h.value_count);
  for (double& v : values) {
    if (h.width == FloatWidth::k64) {
      v = std::bit_cast<double>(get<std::uint64_t>(in));
    } else {
      v = static_cast<double>(std::bit_cast<float>(get<std::uint32_t>(in)));
    }
  }
  if (header_out) *header_out = h;
  return ParameterVector(spec.layout(), std::move(values));
}

void save_checkpoint(const std::filesystem::path& path, const EncoderSpec& spec,
                     const ParameterVector& params, FloatWidth width) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, spec, params, width);
}

ParameterVector load_checkpoint(const std::filesystem::path& path, const EncoderSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in, spec);
}

}  // namespace fssl::core
