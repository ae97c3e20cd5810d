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

// 3D Winograd layers parameterised directly in the Winograd domain.
//
// Weights are a C_oC_i x t³ matrix whose row C_i·n + c holds the transformed
// kernel for output channel n and input channel c. With V = Ĩ·T_I the
// transformed input tiles (row k·C_i + c), a forward pass computes
//
//   Õ(k·C_o + n, :) = (Σ_c G(C_i·n + c, :) ⊙ V(k·C_i + c, :)) · T_O
//
// Three weight forms are supported:
//   dense      G = G_W
//   low-rank   G = (G_W + G_r·G_c) ⊙ M, M a 0/1 mask over the t³ columns
//   compact    only the l kept columns of G plus their locations; the
//              element-wise stage and the output transform touch l columns.
//
// The element-wise stage treats each Winograd position j as an independent
// (T x C_i)·(C_i x C_o) product. Every output is accumulated over c in
// ascending order, so results are independent of the thread count.

#ifndef WINO3D_LAYER_HPP_
#define WINO3D_LAYER_HPP_

#include <cstdint>
#include <vector>

#include "wino3d/refconv.hpp"
#include "wino3d/tensor.hpp"
#include "wino3d/transform.hpp"

namespace wino3d {

/// G_W = G·T_K for a rearranged spatial kernel G (C_oC_i x r³).
template <RealScalar T>
Matrix<T> spatial_to_winograd(const Matrix<T>& spatial,
                              const TransformSet& ts);

/// C_o x C_i x r x r x r kernel to the C_oC_i x r³ rearrangement.
template <RealScalar T>
Matrix<T> rearrange_kernel(const Tensor<T>& kernel);

template <RealScalar T>
class WinogradLayer {
 public:
  WinogradLayer() = default;
  WinogradLayer(std::size_t out_channels, std::size_t in_channels,
                std::size_t pad, Matrix<T> winograd_weight,
                WinogradSpec spec = kF2x3);

  /// Inherits G_W = G·T_K from a spatial C_o x C_i x r³ kernel.
  static WinogradLayer from_spatial(const Tensor<T>& kernel, std::size_t pad,
                                    WinogradSpec spec = kF2x3);

  std::size_t out_channels() const { return out_channels_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t pad() const { return pad_; }
  const WinogradSpec& spec() const { return spec_; }
  std::size_t tile_volume() const { return spec_.tile_volume(); }

  const Matrix<T>& winograd_weight() const { return weight_; }
  const Matrix<T>& row_factor() const { return row_factor_; }
  const Matrix<T>& col_factor() const { return col_factor_; }
  std::size_t rank() const { return row_factor_.cols(); }
  bool has_lowrank() const { return rank() > 0; }

  const std::vector<std::uint8_t>& mask() const { return mask_; }
  /// Sorted indices i with M(i) = 1.
  std::vector<std::size_t> locations() const;
  std::size_t kept_columns() const;
  bool mask_full() const { return kept_columns() == tile_volume(); }

  void set_winograd_weight(Matrix<T> weight);
  /// Installs G_r (C_oC_i x s) and G_c (s x t³); requires 1 <= s <= t³.
  void set_lowrank(Matrix<T> row_factor, Matrix<T> col_factor);
  void clear_lowrank();
  /// Throws EmptyMask when no column is kept.
  void set_mask(std::vector<std::uint8_t> mask);

  // Mutable access for optimisers. Each call invalidates forward caches.
  Matrix<T>& mutable_winograd_weight();
  Matrix<T>& mutable_row_factor();
  Matrix<T>& mutable_col_factor();

  /// G_r·G_c, or zeros without low-rank factors.
  Matrix<T> delta_weight() const;
  /// (G_W + G_r·G_c) ⊙ M.
  Matrix<T> effective_weight() const;

  /// C_oC_i·s + s·t³ with low-rank factors, C_oC_i·t³ otherwise.
  std::size_t trainable_parameters() const;

  /// Changes whenever weights change; caches record it.
  std::uint64_t stamp() const { return stamp_; }

 private:
  void touch();

  std::size_t out_channels_ = 0;
  std::size_t in_channels_ = 0;
  std::size_t pad_ = 0;
  WinogradSpec spec_ = kF2x3;
  Matrix<T> weight_;
  Matrix<T> row_factor_;
  Matrix<T> col_factor_;
  std::vector<std::uint8_t> mask_;
  std::uint64_t stamp_ = 0;
};

/// Weights for the element-wise stage, laid out per Winograd position as a
/// C_i x C_o block: data[(j·C_i + c)·C_o + n] = G(C_i·n + c, positions[j]).
template <RealScalar T>
struct PackedWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<std::size_t> positions;
  std::vector<T> data;
};

/// Packs columns `source_columns` of `weight`; block j is tagged with
/// Winograd position `positions[j]`.
template <RealScalar T>
PackedWeights<T> pack_weights(const Matrix<T>& weight,
                              std::size_t out_channels,
                              std::size_t in_channels,
                              const std::vector<std::size_t>& source_columns,
                              std::vector<std::size_t> positions);

/// Scratch and result buffers of the element-wise stage.
template <RealScalar T>
struct ElementwiseBuffers {
  std::vector<T> gathered;  // [j][k][c], columns of V at the kept positions
  std::vector<T> products;  // [j][k][n]
};

/// Gathers the kept columns of V (T·C_i x t³) and computes, for every kept
/// position j, products[j] = V_j (T x C_i) · W_j (C_i x C_o).
template <RealScalar T>
void elementwise_stage(const Matrix<T>& transformed_input,
                       const PackedWeights<T>& weights,
                       ElementwiseBuffers<T>& buffers, int threads = 1,
                       OpCounter* counter = nullptr);

/// V = Ĩ·T_I for a C_i x D x H x W input laid out by `geom`.
template <RealScalar T>
Matrix<T> winograd_input_transform(const Tensor<T>& input,
                                   const TileGeometry& geom,
                                   OpCounter* counter = nullptr);

template <RealScalar T>
struct ForwardCache {
  Matrix<T> V;  // Ĩ·T_I
  TileGeometry geometry;
  ElementwiseBuffers<T> buffers;
  PackedWeights<T> weights;
  std::uint64_t stamp = 0;
  bool lowrank = false;
};

template <RealScalar T>
struct ForwardResult {
  Tensor<T> output;
  ForwardCache<T> cache;
};

/// Õ = (G_W ⊙̃ V)·T_O, ignoring low-rank factors and mask.
template <RealScalar T>
ForwardResult<T> forward_dense(const WinogradLayer<T>& layer,
                               const Tensor<T>& input,
                               OpCounter* counter = nullptr, int threads = 1);

/// Õ = (((G_W + G_r·G_c) ⊙ M) ⊙̃ V)·T_O over all t³ positions.
template <RealScalar T>
ForwardResult<T> forward_lowrank(const WinogradLayer<T>& layer,
                                 const Tensor<T>& input,
                                 OpCounter* counter = nullptr,
                                 int threads = 1);

template <RealScalar T>
class CompactLayer {
 public:
  CompactLayer() = default;
  /// `weight` is C_oC_i x l; `locations` strictly ascending, all < t³.
  CompactLayer(std::size_t out_channels, std::size_t in_channels,
               std::size_t pad, Matrix<T> weight,
               std::vector<std::size_t> locations, WinogradSpec spec = kF2x3);

  std::size_t out_channels() const { return out_channels_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t pad() const { return pad_; }
  const WinogradSpec& spec() const { return spec_; }
  std::size_t kept_columns() const { return locations_.size(); }
  const Matrix<T>& weight() const { return weight_; }
  const std::vector<std::size_t>& locations() const { return locations_; }
  /// Rows ξ_p of T_O for p in locations (l x m³).
  const Matrix<T>& output_rows() const { return output_rows_; }
  const PackedWeights<T>& packed() const { return packed_; }

 private:
  std::size_t out_channels_ = 0;
  std::size_t in_channels_ = 0;
  std::size_t pad_ = 0;
  WinogradSpec spec_ = kF2x3;
  Matrix<T> weight_;
  std::vector<std::size_t> locations_;
  Matrix<T> output_rows_;
  PackedWeights<T> packed_;
};

/// Gathers the kept columns of the effective weight. Throws EmptyMask if the
/// mask keeps nothing.
template <RealScalar T>
CompactLayer<T> compact(const WinogradLayer<T>& layer);

/// Inverse of the gather in `compact`: a C_oC_i x width matrix that is zero
/// outside `locations`.
template <RealScalar T>
Matrix<T> scatter_columns(const Matrix<T>& compact_weight,
                          const std::vector<std::size_t>& locations,
                          std::size_t width);

/// Õ = (Ḡ_W ⊙̃ V̄)·T̄_O with V̄ the kept columns of V.
template <RealScalar T>
Tensor<T> forward_sparse(const CompactLayer<T>& layer, const Tensor<T>& input,
                         OpCounter* counter = nullptr, int threads = 1);

template <RealScalar T>
struct LayerGrads {
  Matrix<T> d_effective;  // dL/dG_eff ⊙ M; equals dL/dG_W for dense layers
  Matrix<T> d_row_factor;
  Matrix<T> d_col_factor;
  Tensor<T> d_input;
};

/// Gradients of a scalar loss given dL/dO for the forward pass that produced
/// `cache`. Throws CacheError if the layer changed since that pass.
template <RealScalar T>
LayerGrads<T> backward(const WinogradLayer<T>& layer,
                       const ForwardCache<T>& cache, const Tensor<T>& d_out);

struct EwCounts {
  std::uint64_t ew_mults = 0;
  std::uint64_t dense_ew_mults = 0;
};

/// Closed-form element-wise multiply counts: T·C_i·C_o·l and T·C_i·C_o·t³.
EwCounts op_counts(std::size_t out_channels, std::size_t in_channels,
                   std::size_t tiles, const WinogradSpec& spec,
                   std::size_t kept);

}  // namespace wino3d

#endif  // WINO3D_LAYER_HPP_
