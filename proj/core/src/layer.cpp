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

#include "wino3d/layer.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>

#include "wino3d/parallel.hpp"

namespace wino3d {

namespace {

std::uint64_t next_stamp() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

std::vector<std::size_t> iota_positions(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Transform matrices in the layer's precision, in column-compressed form.
template <RealScalar T>
struct TypedTransforms {
  SparseTransform<T> input;          // T_I
  SparseTransform<T> input_adjoint;  // T_I^T
  SparseTransform<T> output_rows;    // T_O^T; column j is row ξ_j of T_O
};

template <RealScalar T>
const TypedTransforms<T>& typed_transforms(const WinogradSpec& spec) {
  const TransformSet& ts = transform_set(spec);
  static const TypedTransforms<T> instance{
      SparseTransform<T>(ts.T_I), SparseTransform<T>(transpose(ts.T_I)),
      SparseTransform<T>(transpose(ts.T_O))};
  return instance;
}

}  // namespace

template <RealScalar T>
Matrix<T> winograd_input_transform(const Tensor<T>& input,
                                   const TileGeometry& geom,
                                   OpCounter* counter) {
  const auto& tt = typed_transforms<T>(geom.spec);
  Matrix<T> tiles;
  disassemble_input_into(input, geom, tiles);
  Matrix<T> v(tiles.rows(), tt.input.cols());
  for (std::size_t r = 0; r < tiles.rows(); ++r) {
    tt.input.apply_row(tiles.row(r).data(), v.row(r).data());
  }
  if (counter) counter->transform_mults += tiles.rows() * tt.input.nonzeros();
  return v;
}

namespace {

// out (rows x n) = a (rows x k) · b (k x n); each output sums over k in
// ascending order. Four rows share each load of b.
template <RealScalar T>
void small_gemm(const T* a, const T* b, T* out, std::size_t rows,
                std::size_t k_dim, std::size_t n_dim) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    T* o0 = out + r * n_dim;
    T* o1 = o0 + n_dim;
    T* o2 = o1 + n_dim;
    T* o3 = o2 + n_dim;
    std::fill(o0, o0 + 4 * n_dim, T{0});
    const T* a0 = a + r * k_dim;
    const T* a1 = a0 + k_dim;
    const T* a2 = a1 + k_dim;
    const T* a3 = a2 + k_dim;
    for (std::size_t c = 0; c < k_dim; ++c) {
      const T v0 = a0[c];
      const T v1 = a1[c];
      const T v2 = a2[c];
      const T v3 = a3[c];
      const T* w = b + c * n_dim;
      for (std::size_t n = 0; n < n_dim; ++n) {
        o0[n] += v0 * w[n];
        o1[n] += v1 * w[n];
        o2[n] += v2 * w[n];
        o3[n] += v3 * w[n];
      }
    }
  }
  for (; r < rows; ++r) {
    T* o = out + r * n_dim;
    std::fill(o, o + n_dim, T{0});
    const T* ar = a + r * k_dim;
    for (std::size_t c = 0; c < k_dim; ++c) {
      const T v = ar[c];
      const T* w = b + c * n_dim;
      for (std::size_t n = 0; n < n_dim; ++n) o[n] += v * w[n];
    }
  }
}

// Element-wise stage followed by the output transform, restricted to the
// packed positions. `out_rows` column j holds the T_O row paired with packed
// block j.
template <RealScalar T>
Tensor<T> run_forward(const PackedWeights<T>& weights, const Matrix<T>& v,
                      const TileGeometry& geom,
                      const SparseTransform<T>& out_rows,
                      ElementwiseBuffers<T>& buffers, int threads,
                      OpCounter* counter) {
  elementwise_stage(v, weights, buffers, threads, counter);

  const std::size_t co = weights.out_channels;
  const std::size_t rows = geom.tile_count() * co;
  const std::size_t mv = geom.spec.output_volume();
  Matrix<T> out_tiles(rows, mv);
  T* out = out_tiles.data().data();
  std::uint64_t mults = 0;
  for (std::size_t j = 0; j < weights.positions.size(); ++j) {
    const auto entries = out_rows.column(j);
    const T* u = buffers.products.data() + j * rows;
    for (std::size_t row = 0; row < rows; ++row) {
      const T val = u[row];
      T* o = out + row * mv;
      for (const auto& e : entries) o[e.row] += val * e.value;
    }
    mults += rows * entries.size();
  }
  if (counter) counter->transform_mults += mults;
  return reassemble_output(out_tiles, geom);
}

template <RealScalar T>
void check_input(const Tensor<T>& input, std::size_t in_channels) {
  if (input.ndim() != 4) {
    throw ShapeError("layer input must be C x D x H x W, got " +
                     dims_to_string(input.dims()));
  }
  if (input.dim(0) != in_channels) {
    throw ShapeError("layer expects " + std::to_string(in_channels) +
                     " input channels, got " + std::to_string(input.dim(0)));
  }
}

// T_O^T restricted to the given rows of T_O, as columns in that order.
template <RealScalar T>
SparseTransform<T> output_rows_for(const Matrix<T>& rows) {
  return SparseTransform<T>(transpose(rows.template cast<double>()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Weight conversion
// ---------------------------------------------------------------------------

template <RealScalar T>
Matrix<T> spatial_to_winograd(const Matrix<T>& spatial,
                              const TransformSet& ts) {
  if (spatial.cols() != ts.T_K.rows()) {
    throw ShapeError("spatial weight has " + std::to_string(spatial.cols()) +
                     " columns, T_K expects " + std::to_string(ts.T_K.rows()));
  }
  return matmul(spatial.template cast<double>(), ts.T_K).template cast<T>();
}

template <RealScalar T>
Matrix<T> rearrange_kernel(const Tensor<T>& kernel) {
  if (kernel.ndim() != 5) {
    throw ShapeError("kernel must be C_o x C_i x r x r x r, got " +
                     dims_to_string(kernel.dims()));
  }
  const std::size_t r3 = kernel.dim(2) * kernel.dim(3) * kernel.dim(4);
  return Matrix<T>(kernel.dim(0) * kernel.dim(1), r3, kernel.storage());
}

// ---------------------------------------------------------------------------
// WinogradLayer
// ---------------------------------------------------------------------------

template <RealScalar T>
WinogradLayer<T>::WinogradLayer(std::size_t out_channels,
                                std::size_t in_channels, std::size_t pad,
                                Matrix<T> winograd_weight, WinogradSpec spec)
    : out_channels_(out_channels),
      in_channels_(in_channels),
      pad_(pad),
      spec_(spec),
      mask_(spec.tile_volume(), 1),
      stamp_(next_stamp()) {
  check_supported(spec);
  if (out_channels == 0 || in_channels == 0) {
    throw ShapeError("layer channel counts must be positive");
  }
  set_winograd_weight(std::move(winograd_weight));
}

template <RealScalar T>
WinogradLayer<T> WinogradLayer<T>::from_spatial(const Tensor<T>& kernel,
                                                std::size_t pad,
                                                WinogradSpec spec) {
  check_supported(spec);
  if (kernel.ndim() != 5 || kernel.dim(2) != static_cast<std::size_t>(spec.r) ||
      kernel.dim(3) != kernel.dim(2) || kernel.dim(4) != kernel.dim(2)) {
    throw ShapeError("from_spatial expects C_o x C_i x 3 x 3 x 3, got " +
                     dims_to_string(kernel.dims()));
  }
  return WinogradLayer(kernel.dim(0), kernel.dim(1), pad,
                       spatial_to_winograd(rearrange_kernel(kernel),
                                           transform_set(spec)),
                       spec);
}

template <RealScalar T>
std::vector<std::size_t> WinogradLayer<T>::locations() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) out.push_back(i);
  }
  return out;
}

template <RealScalar T>
std::size_t WinogradLayer<T>::kept_columns() const {
  return static_cast<std::size_t>(
      std::count_if(mask_.begin(), mask_.end(), [](auto m) { return m != 0; }));
}

template <RealScalar T>
void WinogradLayer<T>::touch() {
  stamp_ = next_stamp();
}

template <RealScalar T>
void WinogradLayer<T>::set_winograd_weight(Matrix<T> weight) {
  if (weight.rows() != out_channels_ * in_channels_ ||
      weight.cols() != tile_volume()) {
    throw ShapeError("Winograd weight must be " +
                     std::to_string(out_channels_ * in_channels_) + "x" +
                     std::to_string(tile_volume()) + ", got " +
                     std::to_string(weight.rows()) + "x" +
                     std::to_string(weight.cols()));
  }
  weight_ = std::move(weight);
  touch();
}

template <RealScalar T>
void WinogradLayer<T>::set_lowrank(Matrix<T> row_factor,
                                   Matrix<T> col_factor) {
  const std::size_t s = row_factor.cols();
  if (s == 0 || s > tile_volume()) {
    throw RankError("rank " + std::to_string(s) + " outside [1, " +
                    std::to_string(tile_volume()) + "]");
  }
  if (row_factor.rows() != out_channels_ * in_channels_ ||
      col_factor.rows() != s || col_factor.cols() != tile_volume()) {
    throw ShapeError("low-rank factors do not match layer shape");
  }
  row_factor_ = std::move(row_factor);
  col_factor_ = std::move(col_factor);
  touch();
}

template <RealScalar T>
void WinogradLayer<T>::clear_lowrank() {
  row_factor_ = Matrix<T>();
  col_factor_ = Matrix<T>();
  touch();
}

template <RealScalar T>
void WinogradLayer<T>::set_mask(std::vector<std::uint8_t> mask) {
  if (mask.size() != tile_volume()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) +
                     " != " + std::to_string(tile_volume()));
  }
  for (auto& m : mask) m = m ? 1 : 0;
  if (std::none_of(mask.begin(), mask.end(), [](auto m) { return m != 0; })) {
    throw EmptyMask("mask keeps no columns");
  }
  mask_ = std::move(mask);
  touch();
}

template <RealScalar T>
Matrix<T>& WinogradLayer<T>::mutable_winograd_weight() {
  touch();
  return weight_;
}

template <RealScalar T>
Matrix<T>& WinogradLayer<T>::mutable_row_factor() {
  touch();
  return row_factor_;
}

template <RealScalar T>
Matrix<T>& WinogradLayer<T>::mutable_col_factor() {
  touch();
  return col_factor_;
}

template <RealScalar T>
Matrix<T> WinogradLayer<T>::delta_weight() const {
  if (!has_lowrank()) return Matrix<T>(weight_.rows(), weight_.cols());
  return matmul(row_factor_, col_factor_);
}

template <RealScalar T>
Matrix<T> WinogradLayer<T>::effective_weight() const {
  Matrix<T> eff = weight_;
  if (has_lowrank()) {
    const Matrix<T> delta = matmul(row_factor_, col_factor_);
    for (std::size_t i = 0; i < eff.size(); ++i) {
      eff.data()[i] += delta.data()[i];
    }
  }
  for (std::size_t r = 0; r < eff.rows(); ++r) {
    auto row = eff.row(r);
    for (std::size_t j = 0; j < eff.cols(); ++j) {
      if (!mask_[j]) row[j] = T{0};
    }
  }
  return eff;
}

template <RealScalar T>
std::size_t WinogradLayer<T>::trainable_parameters() const {
  const std::size_t pairs = out_channels_ * in_channels_;
  if (has_lowrank()) return pairs * rank() + rank() * tile_volume();
  return pairs * tile_volume();
}

// ---------------------------------------------------------------------------
// Element-wise stage
// ---------------------------------------------------------------------------

template <RealScalar T>
PackedWeights<T> pack_weights(const Matrix<T>& weight,
                              std::size_t out_channels,
                              std::size_t in_channels,
                              const std::vector<std::size_t>& source_columns,
                              std::vector<std::size_t> positions) {
  if (weight.rows() != out_channels * in_channels) {
    throw ShapeError("weight rows " + std::to_string(weight.rows()) +
                     " != C_o*C_i");
  }
  if (source_columns.size() != positions.size()) {
    throw ShapeError("pack_weights: column/position count mismatch");
  }
  PackedWeights<T> p;
  p.out_channels = out_channels;
  p.in_channels = in_channels;
  p.positions = std::move(positions);
  p.data.resize(source_columns.size() * in_channels * out_channels);
  for (std::size_t j = 0; j < source_columns.size(); ++j) {
    const std::size_t col = source_columns[j];
    if (col >= weight.cols()) throw ShapeError("pack_weights: bad column");
    T* block = p.data.data() + j * in_channels * out_channels;
    for (std::size_t n = 0; n < out_channels; ++n) {
      for (std::size_t c = 0; c < in_channels; ++c) {
        block[c * out_channels + n] = weight(in_channels * n + c, col);
      }
    }
  }
  return p;
}

template <RealScalar T>
void elementwise_stage(const Matrix<T>& transformed_input,
                       const PackedWeights<T>& weights,
                       ElementwiseBuffers<T>& buffers, int threads,
                       OpCounter* counter) {
  const std::size_t ci = weights.in_channels;
  const std::size_t co = weights.out_channels;
  const std::size_t rows = transformed_input.rows();
  if (ci == 0 || rows % ci != 0) {
    throw ShapeError("transformed input rows not a multiple of C_i");
  }
  const std::size_t tiles = rows / ci;
  const std::size_t count = weights.positions.size();
  for (std::size_t p : weights.positions) {
    if (p >= transformed_input.cols()) {
      throw ShapeError("position outside the Winograd tile");
    }
  }
  buffers.gathered.resize(count * rows);
  buffers.products.resize(count * tiles * co);

  std::vector<std::uint64_t> done(count, 0);
  parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
    T* gathered = buffers.gathered.data();
    const std::size_t* pos = weights.positions.data();
    // Blocked transpose: a block of V rows stays in L1 while each kept
    // column is written out contiguously.
    constexpr std::size_t kBlock = 64;
    const std::size_t stride = transformed_input.cols();
    for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
      const std::size_t r1 = std::min(rows, r0 + kBlock);
      const T* src = transformed_input.row(r0).data();
      for (std::size_t j = begin; j < end; ++j) {
        T* dst = gathered + j * rows;
        const T* col = src + pos[j];
        for (std::size_t row = r0; row < r1; ++row) {
          dst[row] = col[(row - r0) * stride];
        }
      }
    }
    for (std::size_t j = begin; j < end; ++j) {
      small_gemm(gathered + j * rows, weights.data.data() + j * ci * co,
                 buffers.products.data() + j * tiles * co, tiles, ci, co);
      done[j] = static_cast<std::uint64_t>(tiles) * ci * co;
    }
  });
  if (counter) {
    for (auto d : done) counter->ew_mults += d;
  }
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

namespace {

template <RealScalar T>
ForwardResult<T> forward_with(const WinogradLayer<T>& layer,
                              const Tensor<T>& input, const Matrix<T>& weight,
                              bool lowrank, OpCounter* counter, int threads) {
  check_input(input, layer.in_channels());
  ForwardResult<T> res;
  auto& cache = res.cache;
  cache.geometry = make_tile_geometry(
      {input.dim(1), input.dim(2), input.dim(3)}, layer.pad(), layer.spec());
  cache.V = winograd_input_transform(input, cache.geometry, counter);
  const auto all = iota_positions(layer.tile_volume());
  cache.weights = pack_weights(weight, layer.out_channels(),
                               layer.in_channels(), all, all);
  cache.stamp = layer.stamp();
  cache.lowrank = lowrank;
  res.output = run_forward(cache.weights, cache.V, cache.geometry,
                           typed_transforms<T>(layer.spec()).output_rows,
                           cache.buffers, threads, counter);
  return res;
}

}  // namespace

template <RealScalar T>
ForwardResult<T> forward_dense(const WinogradLayer<T>& layer,
                               const Tensor<T>& input, OpCounter* counter,
                               int threads) {
  return forward_with(layer, input, layer.winograd_weight(), false, counter,
                      threads);
}

template <RealScalar T>
ForwardResult<T> forward_lowrank(const WinogradLayer<T>& layer,
                                 const Tensor<T>& input, OpCounter* counter,
                                 int threads) {
  return forward_with(layer, input, layer.effective_weight(), true, counter,
                      threads);
}

// ---------------------------------------------------------------------------
// Compact layers
// ---------------------------------------------------------------------------

template <RealScalar T>
CompactLayer<T>::CompactLayer(std::size_t out_channels,
                              std::size_t in_channels, std::size_t pad,
                              Matrix<T> weight,
                              std::vector<std::size_t> locations,
                              WinogradSpec spec)
    : out_channels_(out_channels),
      in_channels_(in_channels),
      pad_(pad),
      spec_(spec),
      weight_(std::move(weight)),
      locations_(std::move(locations)) {
  check_supported(spec);
  if (locations_.empty()) throw EmptyMask("compact layer keeps no columns");
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    if (locations_[i] >= spec.tile_volume() ||
        (i > 0 && locations_[i] <= locations_[i - 1])) {
      throw ShapeError("compact locations must be strictly ascending and < t^3");
    }
  }
  if (weight_.rows() != out_channels * in_channels ||
      weight_.cols() != locations_.size()) {
    throw ShapeError("compact weight must be C_oC_i x l");
  }
  const Matrix<double>& t_o = transform_set(spec).T_O;
  output_rows_ = Matrix<T>(locations_.size(), t_o.cols());
  for (std::size_t j = 0; j < locations_.size(); ++j) {
    for (std::size_t q = 0; q < t_o.cols(); ++q) {
      output_rows_(j, q) = static_cast<T>(t_o(locations_[j], q));
    }
  }
  packed_ = pack_weights(weight_, out_channels, in_channels,
                         iota_positions(locations_.size()), locations_);
}

template <RealScalar T>
CompactLayer<T> compact(const WinogradLayer<T>& layer) {
  const auto locs = layer.locations();
  if (locs.empty()) throw EmptyMask("mask keeps no columns");
  const Matrix<T> eff = layer.effective_weight();
  Matrix<T> gathered(eff.rows(), locs.size());
  for (std::size_t r = 0; r < eff.rows(); ++r) {
    for (std::size_t j = 0; j < locs.size(); ++j) gathered(r, j) = eff(r, locs[j]);
  }
  return CompactLayer<T>(layer.out_channels(), layer.in_channels(),
                         layer.pad(), std::move(gathered), locs, layer.spec());
}

template <RealScalar T>
Matrix<T> scatter_columns(const Matrix<T>& compact_weight,
                          const std::vector<std::size_t>& locations,
                          std::size_t width) {
  if (compact_weight.cols() != locations.size()) {
    throw ShapeError("scatter_columns: location count mismatch");
  }
  Matrix<T> out(compact_weight.rows(), width);
  for (std::size_t r = 0; r < compact_weight.rows(); ++r) {
    for (std::size_t j = 0; j < locations.size(); ++j) {
      out(r, locations.at(j)) = compact_weight(r, j);
    }
  }
  return out;
}

template <RealScalar T>
Tensor<T> forward_sparse(const CompactLayer<T>& layer, const Tensor<T>& input,
                         OpCounter* counter, int threads) {
  check_input(input, layer.in_channels());
  const TileGeometry geom = make_tile_geometry(
      {input.dim(1), input.dim(2), input.dim(3)}, layer.pad(), layer.spec());
  const Matrix<T> v = winograd_input_transform(input, geom, counter);
  ElementwiseBuffers<T> buffers;
  return run_forward(layer.packed(), v, geom,
                     output_rows_for(layer.output_rows()), buffers, threads,
                     counter);
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

template <RealScalar T>
LayerGrads<T> backward(const WinogradLayer<T>& layer,
                       const ForwardCache<T>& cache, const Tensor<T>& d_out) {
  const std::size_t tv = layer.tile_volume();
  if (cache.stamp != layer.stamp()) {
    throw CacheError("forward cache is stale: layer weights changed");
  }
  if (cache.weights.positions.size() != tv ||
      cache.weights.in_channels != layer.in_channels() ||
      cache.weights.out_channels != layer.out_channels()) {
    throw CacheError("forward cache does not belong to this layer");
  }
  if (d_out.ndim() != 4 || d_out.dim(0) != layer.out_channels()) {
    throw ShapeError("output gradient has wrong channel count");
  }
  const auto& tt = typed_transforms<T>(layer.spec());
  const TileGeometry& geom = cache.geometry;
  const std::size_t ci = layer.in_channels();
  const std::size_t co = layer.out_channels();
  const std::size_t tiles = geom.tile_count();
  const std::size_t out_rows = tiles * co;
  const std::size_t in_rows = tiles * ci;

  // dU(kn, :) = dÕ(kn, :)·T_O^T, stored position-major like the products.
  const Matrix<T> d_tiles = disassemble_output(d_out, geom);
  std::vector<T> d_u(tv * out_rows);
  std::vector<T> scratch(tv);
  for (std::size_t row = 0; row < out_rows; ++row) {
    tt.output_rows.apply_row(d_tiles.row(row).data(), scratch.data());
    for (std::size_t j = 0; j < tv; ++j) d_u[j * out_rows + row] = scratch[j];
  }

  LayerGrads<T> grads;
  grads.d_effective = Matrix<T>(co * ci, tv);
  Matrix<T> d_v(in_rows, tv);
  std::vector<T> d_w(ci * co);
  for (std::size_t j = 0; j < tv; ++j) {
    const T* du = d_u.data() + j * out_rows;
    const T* vp = cache.buffers.gathered.data() + j * in_rows;
    const T* wp = cache.weights.data.data() + j * ci * co;

    // dG(C_i·n + c, j) = Σ_k dU(kn, j)·V(k·C_i + c, j)
    std::fill(d_w.begin(), d_w.end(), T{0});
    for (std::size_t k = 0; k < tiles; ++k) {
      const T* du_k = du + k * co;
      const T* vp_k = vp + k * ci;
      for (std::size_t c = 0; c < ci; ++c) {
        const T vc = vp_k[c];
        T* dw = d_w.data() + c * co;
        for (std::size_t n = 0; n < co; ++n) dw[n] += vc * du_k[n];
      }
    }
    for (std::size_t n = 0; n < co; ++n) {
      for (std::size_t c = 0; c < ci; ++c) {
        grads.d_effective(ci * n + c, j) = d_w[c * co + n];
      }
    }

    // dV(k·C_i + c, j) = Σ_n dU(kn, j)·G(C_i·n + c, j)
    for (std::size_t k = 0; k < tiles; ++k) {
      const T* du_k = du + k * co;
      for (std::size_t c = 0; c < ci; ++c) {
        const T* w = wp + c * co;
        T acc = T{0};
        for (std::size_t n = 0; n < co; ++n) acc += du_k[n] * w[n];
        d_v(k * ci + c, j) = acc;
      }
    }
  }

  Matrix<T> d_in_tiles(in_rows, tv);
  for (std::size_t row = 0; row < in_rows; ++row) {
    tt.input_adjoint.apply_row(d_v.row(row).data(), d_in_tiles.row(row).data());
  }
  grads.d_input = overlap_add_input(d_in_tiles, geom);

  if (cache.lowrank) {
    const auto& mask = layer.mask();
    for (std::size_t r = 0; r < grads.d_effective.rows(); ++r) {
      auto row = grads.d_effective.row(r);
      for (std::size_t j = 0; j < tv; ++j) {
        if (!mask[j]) row[j] = T{0};
      }
    }
    if (layer.has_lowrank()) {
      grads.d_row_factor =
          matmul(grads.d_effective, transpose(layer.col_factor()));
      grads.d_col_factor =
          matmul(transpose(layer.row_factor()), grads.d_effective);
    }
  }
  return grads;
}

EwCounts op_counts(std::size_t out_channels, std::size_t in_channels,
                   std::size_t tiles, const WinogradSpec& spec,
                   std::size_t kept) {
  const std::size_t tv = spec.tile_volume();
  if (out_channels == 0 || in_channels == 0 || tiles == 0) {
    throw ShapeError("op_counts: sizes must be positive");
  }
  if (kept == 0 || kept > tv) {
    throw RankError("kept columns " + std::to_string(kept) + " outside [1, " +
                    std::to_string(tv) + "]");
  }
  const std::uint64_t base =
      static_cast<std::uint64_t>(tiles) * in_channels * out_channels;
  return {base * kept, base * tv};
}

#define WINO3D_INSTANTIATE(T)                                                 \
  template Matrix<T> spatial_to_winograd(const Matrix<T>&,                    \
                                         const TransformSet&);                \
  template Matrix<T> rearrange_kernel(const Tensor<T>&);                      \
  template Matrix<T> winograd_input_transform(const Tensor<T>&,               \
                                              const TileGeometry&,            \
                                              OpCounter*);                    \
  template class WinogradLayer<T>;                                            \
  template class CompactLayer<T>;                                             \
  template PackedWeights<T> pack_weights(const Matrix<T>&, std::size_t,       \
                                         std::size_t,                         \
                                         const std::vector<std::size_t>&,     \
                                         std::vector<std::size_t>);           \
  template void elementwise_stage(const Matrix<T>&, const PackedWeights<T>&,  \
                                  ElementwiseBuffers<T>&, int, OpCounter*);   \
  template ForwardResult<T> forward_dense(const WinogradLayer<T>&,            \
                                          const Tensor<T>&, OpCounter*, int); \
  template ForwardResult<T> forward_lowrank(const WinogradLayer<T>&,          \
                                            const Tensor<T>&, OpCounter*,     \
                                            int);                             \
  template CompactLayer<T> compact(const WinogradLayer<T>&);                  \
  template Matrix<T> scatter_columns(const Matrix<T>&,                        \
                                     const std::vector<std::size_t>&,         \
                                     std::size_t);                            \
  template Tensor<T> forward_sparse(const CompactLayer<T>&, const Tensor<T>&, \
                                    OpCounter*, int);                         \
  template LayerGrads<T> backward(const WinogradLayer<T>&,                    \
                                  const ForwardCache<T>&, const Tensor<T>&);

WINO3D_INSTANTIATE(float)
WINO3D_INSTANTIATE(double)
#undef WINO3D_INSTANTIATE

}  // namespace wino3d
