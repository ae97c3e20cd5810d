// Copyright 2026 The wino3d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// .lrw model files.
//
//   "LRW3" | version u16 | layer count u16 | layer records
//
// Each record starts with kind u8, C_o u32, C_i u32, m u8, r u8, pad u8 and
// continues with a kind-specific payload. Integers are little-endian, reals
// are f32, matrices row-major.
//
//   0 spatial conv      C_o·C_i·r³ kernel values
//   1 Winograd dense    G_W (C_oC_i x t³)
//   2 Winograd low-rank s u16, G_W, G_r (C_oC_i x s), G_c (s x t³),
//                       mask as a t³-bit set (bit i in byte i/8, LSB first)
//   3 Winograd compact  l u16, l ascending u16 locations, Ḡ_W (C_oC_i x l)
//   4 average pool      no payload; m holds the window size
//   5 linear            C_o x C_i weight, then C_o biases
//
// The model mode is not stored; loading infers LR if any layer carries
// low-rank factors, FW if any Winograd or compact layer exists, FS otherwise.

#ifndef WINO3D_MODEL_IO_HPP_
#define WINO3D_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wino3d/trainer.hpp"

namespace wino3d {

inline constexpr std::uint16_t kModelVersion = 1;

enum class LayerKind : std::uint8_t {
  kSpatial = 0,
  kWinogradDense = 1,
  kWinogradLowRank = 2,
  kWinogradCompact = 3,
  kAvgPool = 4,
  kLinear = 5,
};

template <RealScalar T>
std::vector<std::uint8_t> encode_model(const Model<T>& model);

/// Throws FormatError on bad magic or version, truncation, trailing bytes,
/// unknown kinds or non-ascending locations.
template <RealScalar T>
Model<T> decode_model(std::span<const std::uint8_t> bytes);

template <RealScalar T>
void save_model(const Model<T>& model, const std::filesystem::path& path);

template <RealScalar T>
Model<T> load_model(const std::filesystem::path& path);

}  // namespace wino3d

#endif  // WINO3D_MODEL_IO_HPP_
