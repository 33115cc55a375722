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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fssl/core/encoder.h"
#include "fssl/core/parameter_vector.h"

namespace fssl::core {

// Checkpoint layout, all integers little-endian:
//   char[8]  magic "FSSLCKPT"
//   u32      format version (1)
//   u64      encoder spec hash (FNV-1a of EncoderSpec::canonical())
//   u32      float width in bytes (4 or 8)
//   u32      segment count, then per segment:
//              u32 layer, u8 kind, u64 offset, u64 length
//   u64      value count
//   payload  IEEE-754 values of the given width
// 64-bit checkpoints round-trip bit-exactly; 32-bit ones round to nearest.
enum class FloatWidth : std::uint32_t { k32 = 4, k64 = 8 };

inline constexpr char kCheckpointMagic[8] = {'F', 'S', 'S', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t spec_hash = 0;
  FloatWidth width = FloatWidth::k64;
  std::vector<Segment> segments;
  std::uint64_t value_count = 0;
};

void write_checkpoint(std::ostream& out, const EncoderSpec& spec,
                      const ParameterVector& params, FloatWidth width = FloatWidth::k64);

// Validates magic, version, spec hash and segment table against `spec`.
ParameterVector read_checkpoint(std::istream& in, const EncoderSpec& spec,
                                CheckpointHeader* header = nullptr);

void save_checkpoint(const std::filesystem::path& path, const EncoderSpec& spec,
                     const ParameterVector& params, FloatWidth width = FloatWidth::k64);
ParameterVector load_checkpoint(const std::filesystem::path& path, const EncoderSpec& spec);

}  // namespace fssl::core
