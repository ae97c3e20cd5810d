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

// Winograd F(m^3, r^3) transforms for 3D convolution.
//
// Two equivalent formulations are provided:
//
//  * nested: the 3D transform is a 2D transform on the trailing two axes,
//    a clockwise axis rotation, and a 1D transform on the new last axis,
//      kernel  (K g K^T)^R K^T
//      input   (B^T d B)^R B
//      output  ((A^T x A)^R A)^R
//  * flattened: a tile flattened row-major into a row vector is multiplied
//    by a single matrix, g·T_K (r^3 x t^3), d·T_I (t^3 x t^3), x·T_O
//    (t^3 x m^3).
//
// The Winograd-domain layout produced by both is the rotated one, i.e.
// element (x, y, z) of a transformed tile pairs with kernel axes (v, w, u).
// Kernel and input land in the same layout, and the output transform's
// trailing rotation restores the spatial orientation.

#ifndef WINO3D_TRANSFORM_HPP_
#define WINO3D_TRANSFORM_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "wino3d/tensor.hpp"

namespace wino3d {

struct WinogradSpec {
  int m = 2;  // output tile extent per axis
  int r = 3;  // kernel extent per axis

  constexpr int t() const { return m + r - 1; }
  constexpr std::size_t tile_volume() const {
    return static_cast<std::size_t>(t()) * t() * t();
  }
  constexpr std::size_t kernel_volume() const {
    return static_cast<std::size_t>(r) * r * r;
  }
  constexpr std::size_t output_volume() const {
    return static_cast<std::size_t>(m) * m * m;
  }
  friend constexpr bool operator==(WinogradSpec, WinogradSpec) = default;
};

inline constexpr WinogradSpec kF2x3{2, 3};

/// Throws UnsupportedSpec for anything but F(2, 3).
void check_supported(const WinogradSpec& spec);

/// K (t x r), B (t x t), A (t x m) with A^T((B^T d) ⊙ (K g)) equal to the
/// valid correlation of d with g.
struct BaseMatrices {
  Matrix<double> K;
  Matrix<double> B;
  Matrix<double> A;
};

/// Cook-Toom construction at interpolation points {0, 1, -1} (plus the point
/// at infinity). Entries are exact dyadic rationals.
BaseMatrices base_matrices(const WinogradSpec& spec);

/// Clockwise rotation of the trailing three axes: R(j, k, i) = x(i, j, k).
/// Leading axes are treated as a batch.
template <RealScalar T>
Tensor<T> rotate(const Tensor<T>& x);

Tensor<double> nested_kernel_transform(const Tensor<double>& g,
                                       const BaseMatrices& bm);
Tensor<double> nested_input_transform(const Tensor<double>& d,
                                      const BaseMatrices& bm);
Tensor<double> nested_output_transform(const Tensor<double>& x,
                                       const BaseMatrices& bm);

/// Element (i, j) = base(x, v) · base(y, w) · base(z, u) with
/// i = in²u + in·v + w and j = out²x + out·y + z. `base` is out x in.
Matrix<double> build_flat_matrix(const Matrix<double>& base,
                                 std::size_t in_size, std::size_t out_size);

/// Column permutation realising a rotation of an n x n x n tile that has been
/// flattened row-major: result column p takes source column perm[p].
std::vector<std::size_t> rotation_column_permutation(std::size_t n);

struct TransformSet {
  WinogradSpec spec;
  Matrix<double> T_K;  // r^3 x t^3
  Matrix<double> T_I;  // t^3 x t^3
  Matrix<double> T_O;  // t^3 x m^3
};

TransformSet make_transform_set(const WinogradSpec& spec);

/// Process-wide immutable instance, built on first use.
const TransformSet& transform_set(const WinogradSpec& spec);

/// Column-compressed form of a fixed transform matrix. Multiplying by it
/// skips structural zeros; the remaining terms are summed in ascending row
/// order, so the result is bit-identical to the dense product.
template <RealScalar T>
class SparseTransform {
 public:
  struct Entry {
    std::uint32_t row;
    T value;
  };

  SparseTransform() = default;
  explicit SparseTransform(const Matrix<double>& dense);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return entries_.size(); }
  std::size_t column_nonzeros(std::size_t j) const {
    return col_start_[j + 1] - col_start_[j];
  }

  /// out[j] = Σ_i in[i] · M(i, j), for one row vector.
  void apply_row(const T* in, T* out) const;

  /// Nonzeros of column j in ascending row order.
  std::span<const Entry> column(std::size_t j) const {
    return {entries_.data() + col_start_[j], column_nonzeros(j)};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_start_;
  std::vector<Entry> entries_;
};

/// Tile layout of one convolution problem.
struct TileGeometry {
  WinogradSpec spec;
  std::size_t pad = 0;
  std::array<std::size_t, 3> in_dims{};      // D_i, H_i, W_i
  std::array<std::size_t, 3> out_dims{};     // D_o, H_o, W_o
  std::array<std::size_t, 3> tiles{};        // n_d, n_h, n_w
  std::array<std::size_t, 3> padded_dims{};  // (n - 1)·m + t per axis

  std::size_t tile_count() const { return tiles[0] * tiles[1] * tiles[2]; }
  friend bool operator==(const TileGeometry&, const TileGeometry&) = default;
};

/// Output dims D_i + 2p - r + 1 are rounded up to a multiple of m; the extra
/// high-side rows are zero padding removed again at reassembly.
TileGeometry make_tile_geometry(std::array<std::size_t, 3> in_dims,
                                std::size_t pad, const WinogradSpec& spec);

/// Rows k·C_i + c hold tile k of channel c flattened row-major; tiles are
/// ordered depth-major (k = (kd·n_h + kh)·n_w + kw).
template <RealScalar T>
std::pair<Matrix<T>, TileGeometry> disassemble_input(const Tensor<T>& input,
                                                     const WinogradSpec& spec,
                                                     std::size_t pad);

template <RealScalar T>
void disassemble_input_into(const Tensor<T>& input, const TileGeometry& geom,
                            Matrix<T>& tiles);

/// Places rows k·C_o + n at stride m and crops to geom.out_dims.
template <RealScalar T>
Tensor<T> reassemble_output(const Matrix<T>& out_tiles,
                            const TileGeometry& geom);

/// Adjoint of reassemble_output: splits a spatial output gradient into
/// m^3 tiles, with zeros for cropped positions.
template <RealScalar T>
Matrix<T> disassemble_output(const Tensor<T>& out, const TileGeometry& geom);

/// Adjoint of disassemble_input: overlap-adds tile rows back into the
/// unpadded input shape.
template <RealScalar T>
Tensor<T> overlap_add_input(const Matrix<T>& tiles, const TileGeometry& geom);

}  // namespace wino3d

#endif  // WINO3D_TRANSFORM_HPP_
