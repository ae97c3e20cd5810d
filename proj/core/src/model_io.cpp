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

#include "wino3d/model_io.hpp"

#include <limits>

#include "wino3d/binary_io.hpp"

namespace wino3d {

namespace {

using detail::ByteReader;
using detail::ByteWriter;

template <RealScalar T>
void put_reals(ByteWriter& w, std::span<const T> values) {
  for (T v : values) w.put(static_cast<float>(v));
}

template <RealScalar T>
std::vector<T> get_reals(ByteReader& r, std::size_t n) {
  if (r.remaining() / 4 < n) {
    throw FormatError("model payload truncated");
  }
  std::vector<T> out(n);
  for (auto& v : out) v = static_cast<T>(r.get<float>());
  return out;
}

std::uint32_t to_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("value does not fit the model format");
  }
  return static_cast<std::uint32_t>(v);
}

std::uint16_t to_u16(std::size_t v) {
  if (v > std::numeric_limits<std::uint16_t>::max()) {
    throw FormatError("value does not fit the model format");
  }
  return static_cast<std::uint16_t>(v);
}

std::uint8_t to_u8(std::size_t v) {
  if (v > std::numeric_limits<std::uint8_t>::max()) {
    throw FormatError("value does not fit the model format");
  }
  return static_cast<std::uint8_t>(v);
}

void put_header(ByteWriter& w, LayerKind kind, std::size_t co, std::size_t ci,
                std::size_t m, std::size_t r, std::size_t pad) {
  w.put(static_cast<std::uint8_t>(kind));
  w.put(to_u32(co));
  w.put(to_u32(ci));
  w.put(to_u8(m));
  w.put(to_u8(r));
  w.put(to_u8(pad));
}

WinogradSpec read_spec(std::uint8_t m, std::uint8_t r) {
  const WinogradSpec spec{m, r};
  if (!(spec == kF2x3)) {
    throw FormatError("unsupported Winograd tile F(" + std::to_string(m) + ", " +
                      std::to_string(r) + ")");
  }
  return spec;
}

}  // namespace

template <RealScalar T>
std::vector<std::uint8_t> encode_model(const Model<T>& model) {
  ByteWriter w;
  w.bytes("LRW3");
  w.put(kModelVersion);
  w.put(to_u16(model.layers.size()));
  for (const auto& layer : model.layers) {
    if (const auto* c = std::get_if<SpatialConv<T>>(&layer)) {
      put_header(w, LayerKind::kSpatial, c->kernel.dim(0), c->kernel.dim(1), 0,
                 c->kernel.dim(2), c->pad);
      put_reals<T>(w, c->kernel.data());
    } else if (const auto* l = std::get_if<WinogradLayer<T>>(&layer)) {
      const auto& spec = l->spec();
      const bool plain = !l->has_lowrank() && l->mask_full();
      put_header(w, plain ? LayerKind::kWinogradDense : LayerKind::kWinogradLowRank,
                 l->out_channels(), l->in_channels(),
                 static_cast<std::size_t>(spec.m), static_cast<std::size_t>(spec.r),
                 l->pad());
      if (!plain) w.put(to_u16(l->rank()));
      put_reals<T>(w, l->winograd_weight().data());
      if (!plain) {
        put_reals<T>(w, l->row_factor().data());
        put_reals<T>(w, l->col_factor().data());
        const auto& mask = l->mask();
        std::vector<std::uint8_t> bits((mask.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < mask.size(); ++i) {
          if (mask[i]) bits[i / 8] = static_cast<std::uint8_t>(bits[i / 8] | (1u << (i % 8)));
        }
        for (auto b : bits) w.put(b);
      }
    } else if (const auto* cl = std::get_if<CompactLayer<T>>(&layer)) {
      const auto& spec = cl->spec();
      put_header(w, LayerKind::kWinogradCompact, cl->out_channels(),
                 cl->in_channels(), static_cast<std::size_t>(spec.m),
                 static_cast<std::size_t>(spec.r), cl->pad());
      w.put(to_u16(cl->kept_columns()));
      for (std::size_t p : cl->locations()) w.put(to_u16(p));
      put_reals<T>(w, cl->weight().data());
    } else if (const auto* p = std::get_if<AvgPool>(&layer)) {
      put_header(w, LayerKind::kAvgPool, 0, 0, p->size, 0, 0);
    } else {
      const auto& lin = std::get<Linear<T>>(layer);
      put_header(w, LayerKind::kLinear, lin.weight.rows(), lin.weight.cols(), 0, 0, 0);
      put_reals<T>(w, lin.weight.data());
      put_reals<T>(w, std::span<const T>(lin.bias));
    }
  }
  return std::move(w.buffer());
}

template <RealScalar T>
Model<T> decode_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 4 || r.bytes(4) != "LRW3") {
    throw FormatError("not a model file (bad magic)");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kModelVersion) {
    throw FormatError("unsupported model version " + std::to_string(version));
  }
  const auto count = r.get<std::uint16_t>();
  Model<T> model;
  bool any_winograd = false;
  bool any_lowrank = false;
  for (std::size_t i = 0; i < count; ++i) {
    const auto kind = r.get<std::uint8_t>();
    const std::size_t co = r.get<std::uint32_t>();
    const std::size_t ci = r.get<std::uint32_t>();
    const auto m = r.get<std::uint8_t>();
    const auto rr = r.get<std::uint8_t>();
    const std::size_t pad = r.get<std::uint8_t>();
    const bool conv_like = kind <= 3;
    if (conv_like && (co == 0 || ci == 0)) {
      throw FormatError("layer " + std::to_string(i) + " has zero channels");
    }
    // Every channel pair stores at least one f32; rejects absurd sizes early.
    if (conv_like && ci > r.remaining() / 4 / co) {
      throw FormatError("layer " + std::to_string(i) + " payload truncated");
    }
    switch (static_cast<LayerKind>(kind)) {
      case LayerKind::kSpatial: {
        if (rr == 0) throw FormatError("spatial kernel size is zero");
        const std::size_t n = co * ci * rr * rr * rr;
        model.layers.emplace_back(SpatialConv<T>{
            Tensor<T>({co, ci, rr, rr, rr}, get_reals<T>(r, n)), pad});
        break;
      }
      case LayerKind::kWinogradDense: {
        const WinogradSpec spec = read_spec(m, rr);
        const std::size_t tv = spec.tile_volume();
        model.layers.emplace_back(WinogradLayer<T>(
            co, ci, pad, Matrix<T>(co * ci, tv, get_reals<T>(r, co * ci * tv)),
            spec));
        any_winograd = true;
        break;
      }
      case LayerKind::kWinogradLowRank: {
        const WinogradSpec spec = read_spec(m, rr);
        const std::size_t tv = spec.tile_volume();
        const std::size_t s = r.get<std::uint16_t>();
        if (s > tv) throw FormatError("low-rank rank exceeds t^3");
        WinogradLayer<T> layer(
            co, ci, pad, Matrix<T>(co * ci, tv, get_reals<T>(r, co * ci * tv)),
            spec);
        if (s > 0) {
          Matrix<T> gr(co * ci, s, get_reals<T>(r, co * ci * s));
          Matrix<T> gc(s, tv, get_reals<T>(r, s * tv));
          layer.set_lowrank(std::move(gr), std::move(gc));
          any_lowrank = true;
        }
        std::vector<std::uint8_t> mask(tv, 0);
        for (std::size_t b = 0; b < (tv + 7) / 8; ++b) {
          const auto byte = r.get<std::uint8_t>();
          for (std::size_t k = 0; k < 8 && b * 8 + k < tv; ++k) {
            mask[b * 8 + k] = (byte >> k) & 1u;
          }
        }
        try {
          layer.set_mask(std::move(mask));
        } catch (const EmptyMask&) {
          throw FormatError("stored mask keeps no columns");
        }
        model.layers.emplace_back(std::move(layer));
        any_winograd = true;
        break;
      }
      case LayerKind::kWinogradCompact: {
        const WinogradSpec spec = read_spec(m, rr);
        const std::size_t l = r.get<std::uint16_t>();
        if (l == 0 || l > spec.tile_volume()) {
          throw FormatError("compact layer keeps " + std::to_string(l) + " columns");
        }
        std::vector<std::size_t> locs(l);
        for (std::size_t j = 0; j < l; ++j) {
          locs[j] = r.get<std::uint16_t>();
          if (locs[j] >= spec.tile_volume() || (j > 0 && locs[j] <= locs[j - 1])) {
            throw FormatError("compact locations must be strictly ascending and < t^3");
          }
        }
        model.layers.emplace_back(CompactLayer<T>(
            co, ci, pad, Matrix<T>(co * ci, l, get_reals<T>(r, co * ci * l)),
            std::move(locs), spec));
        any_winograd = true;
        break;
      }
      case LayerKind::kAvgPool:
        if (m == 0) throw FormatError("pool window is zero");
        model.layers.emplace_back(AvgPool{m});
        break;
      case LayerKind::kLinear: {
        if (co == 0 || ci == 0) throw FormatError("linear layer has zero size");
        Linear<T> lin;
        lin.weight = Matrix<T>(co, ci, get_reals<T>(r, co * ci));
        lin.bias = get_reals<T>(r, co);
        model.layers.emplace_back(std::move(lin));
        break;
      }
      default:
        throw FormatError("unknown layer kind " + std::to_string(kind));
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after model");
  }
  model.mode = any_lowrank ? Mode::kLR : any_winograd ? Mode::kFW : Mode::kFS;
  return model;
}

template <RealScalar T>
void save_model(const Model<T>& model, const std::filesystem::path& path) {
  detail::write_file(path, encode_model(model));
}

template <RealScalar T>
Model<T> load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_model<T>(bytes);
}

template std::vector<std::uint8_t> encode_model(const Model<float>&);
template std::vector<std::uint8_t> encode_model(const Model<double>&);
template Model<float> decode_model(std::span<const std::uint8_t>);
template Model<double> decode_model(std::span<const std::uint8_t>);
template void save_model(const Model<float>&, const std::filesystem::path&);
template void save_model(const Model<double>&, const std::filesystem::path&);
template Model<float> load_model(const std::filesystem::path&);
template Model<double> load_model(const std::filesystem::path&);

}  // namespace wino3d
