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

#include "wino3d/transform.hpp"

#include <cstdlib>
#include <numeric>
#include <optional>

namespace wino3d {

namespace {

// Exact rational arithmetic for the Cook-Toom construction. Values stay tiny
// for the supported tile sizes.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Fraction() = default;
  Fraction(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  bool is_zero() const { return num == 0; }

  friend Fraction operator+(Fraction a, Fraction b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
  }
  friend Fraction operator-(Fraction a, Fraction b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Fraction operator*(Fraction a, Fraction b) {
    return {a.num * b.num, a.den * b.den};
  }
  friend Fraction operator/(Fraction a, Fraction b) {
    return {a.num * b.den, a.den * b.num};
  }
};

using FracMatrix = std::vector<std::vector<Fraction>>;

// Evaluation matrix of polynomials with `terms` coefficients at the finite
// points followed by the point at infinity (leading coefficient).
FracMatrix evaluation_matrix(const std::vector<std::int64_t>& points,
                             std::size_t terms) {
  FracMatrix v(points.size() + 1, std::vector<Fraction>(terms));
  for (std::size_t j = 0; j < points.size(); ++j) {
    Fraction p = 1;
    for (std::size_t k = 0; k < terms; ++k) {
      v[j][k] = p;
      p = p * Fraction(points[j]);
    }
  }
  v[points.size()][terms - 1] = 1;
  return v;
}

FracMatrix invert(FracMatrix a) {
  const std::size_t n = a.size();
  FracMatrix inv(n, std::vector<Fraction>(n));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col].is_zero()) ++pivot;
    if (pivot == n) throw UnsupportedSpec("singular Cook-Toom system");
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const Fraction p = a[col][col];
    for (std::size_t k = 0; k < n; ++k) {
      a[col][k] = a[col][k] / p;
      inv[col][k] = inv[col][k] / p;
    }
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col || a[row][col].is_zero()) continue;
      const Fraction f = a[row][col];
      for (std::size_t k = 0; k < n; ++k) {
        a[row][k] = a[row][k] - f * a[col][k];
        inv[row][k] = inv[row][k] - f * inv[col][k];
      }
    }
  }
  return inv;
}

Matrix<double> to_matrix(const FracMatrix& f) {
  Matrix<double> m(f.size(), f.front().size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f[i].size(); ++j) m(i, j) = f[i][j].to_double();
  }
  return m;
}

// Y(i, j, k) = Σ_{v,w} left(j, v) · x(i, v, w) · right(w, k), per slice i.
Tensor<double> apply_trailing_2d(const Tensor<double>& x,
                                 const Matrix<double>& left,
                                 const Matrix<double>& right) {
  if (x.ndim() != 3) throw ShapeError("expected a 3-axis tensor");
  const std::size_t n0 = x.dim(0);
  const std::size_t n1 = x.dim(1);
  const std::size_t n2 = x.dim(2);
  if (left.cols() != n1 || right.rows() != n2) {
    throw ShapeError("transform matrices do not match tile " +
                     dims_to_string(x.dims()));
  }
  Tensor<double> out({n0, left.rows(), right.cols()});
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < left.rows(); ++j) {
      for (std::size_t k = 0; k < right.cols(); ++k) {
        double acc = 0.0;
        for (std::size_t v = 0; v < n1; ++v) {
          for (std::size_t w = 0; w < n2; ++w) {
            acc += left(j, v) * x.at(i, v, w) * right(w, k);
          }
        }
        out.at(i, j, k) = acc;
      }
    }
  }
  return out;
}

// Y(a, b, k) = Σ_u x(a, b, u) · right(u, k).
Tensor<double> apply_last_axis(const Tensor<double>& x,
                               const Matrix<double>& right) {
  if (x.ndim() != 3 || right.rows() != x.dim(2)) {
    throw ShapeError("last-axis transform shape mismatch");
  }
  Tensor<double> out({x.dim(0), x.dim(1), right.cols()});
  for (std::size_t a = 0; a < x.dim(0); ++a) {
    for (std::size_t b = 0; b < x.dim(1); ++b) {
      for (std::size_t k = 0; k < right.cols(); ++k) {
        double acc = 0.0;
        for (std::size_t u = 0; u < x.dim(2); ++u) {
          acc += x.at(a, b, u) * right(u, k);
        }
        out.at(a, b, k) = acc;
      }
    }
  }
  return out;
}

void require_cube(const Tensor<double>& x, std::size_t n, const char* what) {
  if (x.ndim() != 3 || x.dim(0) != n || x.dim(1) != n || x.dim(2) != n) {
    throw ShapeError(std::string(what) + " expects a " + std::to_string(n) +
                     "^3 tile, got " + dims_to_string(x.dims()));
  }
}

}  // namespace

void check_supported(const WinogradSpec& spec) {
  if (spec.m != 2 || spec.r != 3) {
    throw UnsupportedSpec("only F(2x2x2, 3x3x3) is supported, got F(" +
                          std::to_string(spec.m) + ", " +
                          std::to_string(spec.r) + ")");
  }
}

BaseMatrices base_matrices(const WinogradSpec& spec) {
  check_supported(spec);
  const std::vector<std::int64_t> points = {0, 1, -1};
  const auto t = static_cast<std::size_t>(spec.t());

  // Linear convolution c = a * g factors as C((V_m a) ⊙ (V_r g)), with C the
  // inverse of V_t. Correlation is its transpose: y = V_m^T((C^T d) ⊙ V_r g).
  const FracMatrix vm = evaluation_matrix(points, static_cast<std::size_t>(spec.m));
  const FracMatrix vr = evaluation_matrix(points, static_cast<std::size_t>(spec.r));
  FracMatrix c = invert(evaluation_matrix(points, t));

  // Move the Lagrange denominators |Π_{l≠j}(p_j - p_l)| from the kernel side
  // into B so that B is integral.
  FracMatrix k = vr;
  for (std::size_t j = 0; j < points.size(); ++j) {
    std::int64_t f = 1;
    for (std::size_t l = 0; l < points.size(); ++l) {
      if (l != j) f *= points[j] - points[l];
    }
    const Fraction s(std::llabs(f));
    for (auto& e : k[j]) e = e / s;
    for (std::size_t row = 0; row < t; ++row) c[row][j] = c[row][j] * s;
  }

  return BaseMatrices{to_matrix(k), to_matrix(c), to_matrix(vm)};
}

template <RealScalar T>
Tensor<T> rotate(const Tensor<T>& x) {
  if (x.ndim() < 3) {
    throw ShapeError("rotate expects at least 3 axes, got " +
                     dims_to_string(x.dims()));
  }
  const std::size_t nd = x.ndim();
  const std::size_t a = x.dim(nd - 3);
  const std::size_t b = x.dim(nd - 2);
  const std::size_t c = x.dim(nd - 1);
  const std::size_t slice = a * b * c;
  const std::size_t batch = x.size() / slice;

  Dims out_dims = x.dims();
  out_dims[nd - 3] = b;
  out_dims[nd - 2] = c;
  out_dims[nd - 1] = a;
  Tensor<T> out(out_dims);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* src = x.data().data() + n * slice;
    T* dst = out.data().data() + n * slice;
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        for (std::size_t k = 0; k < c; ++k) {
          dst[(j * c + k) * a + i] = src[(i * b + j) * c + k];
        }
      }
    }
  }
  return out;
}

template Tensor<float> rotate(const Tensor<float>&);
template Tensor<double> rotate(const Tensor<double>&);

Tensor<double> nested_kernel_transform(const Tensor<double>& g,
                                       const BaseMatrices& bm) {
  require_cube(g, bm.K.cols(), "kernel transform");
  const Matrix<double> kt = transpose(bm.K);
  return apply_last_axis(rotate(apply_trailing_2d(g, bm.K, kt)), kt);
}

Tensor<double> nested_input_transform(const Tensor<double>& d,
                                      const BaseMatrices& bm) {
  require_cube(d, bm.B.rows(), "input transform");
  return apply_last_axis(
      rotate(apply_trailing_2d(d, transpose(bm.B), bm.B)), bm.B);
}

Tensor<double> nested_output_transform(const Tensor<double>& x,
                                       const BaseMatrices& bm) {
  require_cube(x, bm.A.rows(), "output transform");
  return rotate(apply_last_axis(
      rotate(apply_trailing_2d(x, transpose(bm.A), bm.A)), bm.A));
}

Matrix<double> build_flat_matrix(const Matrix<double>& base,
                                 std::size_t in_size, std::size_t out_size) {
  if (base.rows() != out_size || base.cols() != in_size) {
    throw ShapeError("build_flat_matrix: base is " +
                     std::to_string(base.rows()) + "x" +
                     std::to_string(base.cols()) + ", expected " +
                     std::to_string(out_size) + "x" + std::to_string(in_size));
  }
  const std::size_t n_in = in_size * in_size * in_size;
  const std::size_t n_out = out_size * out_size * out_size;
  Matrix<double> out(n_in, n_out);
  for (std::size_t u = 0; u < in_size; ++u) {
    for (std::size_t v = 0; v < in_size; ++v) {
      for (std::size_t w = 0; w < in_size; ++w) {
        const std::size_t i = (u * in_size + v) * in_size + w;
        for (std::size_t x = 0; x < out_size; ++x) {
          for (std::size_t y = 0; y < out_size; ++y) {
            for (std::size_t z = 0; z < out_size; ++z) {
              const std::size_t j = (x * out_size + y) * out_size + z;
              out(i, j) = base(x, v) * base(y, w) * base(z, u);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<std::size_t> rotation_column_permutation(std::size_t n) {
  // rotate: R(j, k, i) = x(i, j, k).
  std::vector<std::size_t> perm(n * n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        perm[(j * n + k) * n + i] = (i * n + j) * n + k;
      }
    }
  }
  return perm;
}

TransformSet make_transform_set(const WinogradSpec& spec) {
  check_supported(spec);
  const BaseMatrices bm = base_matrices(spec);
  const auto t = static_cast<std::size_t>(spec.t());
  const auto r = static_cast<std::size_t>(spec.r);
  const auto m = static_cast<std::size_t>(spec.m);

  TransformSet ts{spec, build_flat_matrix(bm.K, r, t),
                  build_flat_matrix(transpose(bm.B), t, t), {}};

  // The element rule yields the rotated output layout; the output
  // transform's final rotation is a column permutation.
  const Matrix<double> rotated = build_flat_matrix(transpose(bm.A), t, m);
  const auto perm = rotation_column_permutation(m);
  ts.T_O = Matrix<double>(rotated.rows(), rotated.cols());
  for (std::size_t i = 0; i < rotated.rows(); ++i) {
    for (std::size_t p = 0; p < perm.size(); ++p) {
      ts.T_O(i, p) = rotated(i, perm[p]);
    }
  }
  return ts;
}

const TransformSet& transform_set(const WinogradSpec& spec) {
  check_supported(spec);
  static const TransformSet instance = make_transform_set(kF2x3);
  return instance;
}

template <RealScalar T>
SparseTransform<T>::SparseTransform(const Matrix<double>& dense)
    : rows_(dense.rows()), cols_(dense.cols()) {
  col_start_.reserve(cols_ + 1);
  col_start_.push_back(0);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) {
      if (dense(i, j) != 0.0) {
        entries_.push_back({static_cast<std::uint32_t>(i),
                            static_cast<T>(dense(i, j))});
      }
    }
    col_start_.push_back(entries_.size());
  }
}

template <RealScalar T>
void SparseTransform<T>::apply_row(const T* in, T* out) const {
  for (std::size_t j = 0; j < cols_; ++j) {
    T acc = T{0};
    for (std::size_t e = col_start_[j]; e < col_start_[j + 1]; ++e) {
      acc += in[entries_[e].row] * entries_[e].value;
    }
    out[j] = acc;
  }
}

template class SparseTransform<float>;
template class SparseTransform<double>;

TileGeometry make_tile_geometry(std::array<std::size_t, 3> in_dims,
                                std::size_t pad, const WinogradSpec& spec) {
  check_supported(spec);
  TileGeometry g;
  g.spec = spec;
  g.pad = pad;
  g.in_dims = in_dims;
  const auto m = static_cast<std::size_t>(spec.m);
  const auto r = static_cast<std::size_t>(spec.r);
  const auto t = static_cast<std::size_t>(spec.t());
  for (std::size_t a = 0; a < 3; ++a) {
    if (in_dims[a] == 0) throw ShapeError("input spatial dims must be >= 1");
    if (in_dims[a] + 2 * pad < r) {
      throw ShapeError("padded input extent " +
                       std::to_string(in_dims[a] + 2 * pad) +
                       " is smaller than the kernel");
    }
    g.out_dims[a] = in_dims[a] + 2 * pad - r + 1;
    g.tiles[a] = (g.out_dims[a] + m - 1) / m;
    g.padded_dims[a] = (g.tiles[a] - 1) * m + t;
  }
  return g;
}

template <RealScalar T>
void disassemble_input_into(const Tensor<T>& input, const TileGeometry& geom,
                            Matrix<T>& tiles) {
  if (input.ndim() != 4) {
    throw ShapeError("input must be C x D x H x W, got " +
                     dims_to_string(input.dims()));
  }
  for (std::size_t a = 0; a < 3; ++a) {
    if (input.dim(a + 1) != geom.in_dims[a]) {
      throw ShapeError("input does not match tile geometry");
    }
  }
  const std::size_t channels = input.dim(0);
  const std::size_t t = static_cast<std::size_t>(geom.spec.t());
  const std::size_t m = static_cast<std::size_t>(geom.spec.m);
  const std::size_t tv = t * t * t;
  const auto [D, H, W] = geom.in_dims;
  const auto [nd, nh, nw] = geom.tiles;
  const auto pad = static_cast<std::ptrdiff_t>(geom.pad);
  if (tiles.rows() != geom.tile_count() * channels || tiles.cols() != tv) {
    tiles = Matrix<T>(geom.tile_count() * channels, tv);
  }

  const T* src = input.data().data();
  std::size_t k = 0;
  for (std::size_t td = 0; td < nd; ++td) {
    for (std::size_t th = 0; th < nh; ++th) {
      for (std::size_t tw = 0; tw < nw; ++tw, ++k) {
        const auto d0 = static_cast<std::ptrdiff_t>(td * m) - pad;
        const auto h0 = static_cast<std::ptrdiff_t>(th * m) - pad;
        const auto w0 = static_cast<std::ptrdiff_t>(tw * m) - pad;
        for (std::size_t c = 0; c < channels; ++c) {
          T* row = tiles.row(k * channels + c).data();
          const T* plane = src + c * D * H * W;
          std::size_t idx = 0;
          for (std::size_t u = 0; u < t; ++u) {
            const std::ptrdiff_t d = d0 + static_cast<std::ptrdiff_t>(u);
            const bool d_ok = d >= 0 && d < static_cast<std::ptrdiff_t>(D);
            for (std::size_t v = 0; v < t; ++v) {
              const std::ptrdiff_t h = h0 + static_cast<std::ptrdiff_t>(v);
              const bool h_ok = h >= 0 && h < static_cast<std::ptrdiff_t>(H);
              for (std::size_t w = 0; w < t; ++w, ++idx) {
                const std::ptrdiff_t x = w0 + static_cast<std::ptrdiff_t>(w);
                const bool ok = d_ok && h_ok && x >= 0 &&
                                x < static_cast<std::ptrdiff_t>(W);
                row[idx] = ok ? plane[(static_cast<std::size_t>(d) * H +
                                       static_cast<std::size_t>(h)) *
                                          W +
                                      static_cast<std::size_t>(x)]
                              : T{0};
              }
            }
          }
        }
      }
    }
  }
}

template <RealScalar T>
std::pair<Matrix<T>, TileGeometry> disassemble_input(const Tensor<T>& input,
                                                     const WinogradSpec& spec,
                                                     std::size_t pad) {
  if (input.ndim() != 4) {
    throw ShapeError("input must be C x D x H x W, got " +
                     dims_to_string(input.dims()));
  }
  TileGeometry geom =
      make_tile_geometry({input.dim(1), input.dim(2), input.dim(3)}, pad, spec);
  Matrix<T> tiles;
  disassemble_input_into(input, geom, tiles);
  return {std::move(tiles), geom};
}

template <RealScalar T>
Tensor<T> reassemble_output(const Matrix<T>& out_tiles,
                            const TileGeometry& geom) {
  const std::size_t m = static_cast<std::size_t>(geom.spec.m);
  const std::size_t count = geom.tile_count();
  if (out_tiles.cols() != m * m * m || count == 0 ||
      out_tiles.rows() % count != 0 || out_tiles.rows() == 0) {
    throw ShapeError("output tiles " + std::to_string(out_tiles.rows()) + "x" +
                     std::to_string(out_tiles.cols()) +
                     " do not match tile geometry");
  }
  const std::size_t channels = out_tiles.rows() / count;
  const auto [Do, Ho, Wo] = geom.out_dims;
  const auto [nd, nh, nw] = geom.tiles;
  Tensor<T> out({channels, Do, Ho, Wo});
  T* dst = out.data().data();
  std::size_t k = 0;
  for (std::size_t td = 0; td < nd; ++td) {
    for (std::size_t th = 0; th < nh; ++th) {
      for (std::size_t tw = 0; tw < nw; ++tw, ++k) {
        for (std::size_t n = 0; n < channels; ++n) {
          const T* row = out_tiles.row(k * channels + n).data();
          T* plane = dst + n * Do * Ho * Wo;
          for (std::size_t a = 0; a < m; ++a) {
            const std::size_t d = td * m + a;
            if (d >= Do) break;
            for (std::size_t b = 0; b < m; ++b) {
              const std::size_t h = th * m + b;
              if (h >= Ho) break;
              for (std::size_t c = 0; c < m; ++c) {
                const std::size_t w = tw * m + c;
                if (w >= Wo) break;
                plane[(d * Ho + h) * Wo + w] = row[(a * m + b) * m + c];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <RealScalar T>
Matrix<T> disassemble_output(const Tensor<T>& out, const TileGeometry& geom) {
  const auto [Do, Ho, Wo] = geom.out_dims;
  if (out.ndim() != 4 || out.dim(1) != Do || out.dim(2) != Ho ||
      out.dim(3) != Wo) {
    throw ShapeError("output gradient " + dims_to_string(out.dims()) +
                     " does not match tile geometry");
  }
  const std::size_t m = static_cast<std::size_t>(geom.spec.m);
  const std::size_t channels = out.dim(0);
  const auto [nd, nh, nw] = geom.tiles;
  Matrix<T> tiles(geom.tile_count() * channels, m * m * m);
  const T* src = out.data().data();
  std::size_t k = 0;
  for (std::size_t td = 0; td < nd; ++td) {
    for (std::size_t th = 0; th < nh; ++th) {
      for (std::size_t tw = 0; tw < nw; ++tw, ++k) {
        for (std::size_t n = 0; n < channels; ++n) {
          T* row = tiles.row(k * channels + n).data();
          const T* plane = src + n * Do * Ho * Wo;
          for (std::size_t a = 0; a < m; ++a) {
            const std::size_t d = td * m + a;
            if (d >= Do) break;
            for (std::size_t b = 0; b < m; ++b) {
              const std::size_t h = th * m + b;
              if (h >= Ho) break;
              for (std::size_t c = 0; c < m; ++c) {
                const std::size_t w = tw * m + c;
                if (w >= Wo) break;
                row[(a * m + b) * m + c] = plane[(d * Ho + h) * Wo + w];
              }
            }
          }
        }
      }
    }
  }
  return tiles;
}

template <RealScalar T>
Tensor<T> overlap_add_input(const Matrix<T>& tiles, const TileGeometry& geom) {
  const std::size_t t = static_cast<std::size_t>(geom.spec.t());
  const std::size_t m = static_cast<std::size_t>(geom.spec.m);
  const std::size_t count = geom.tile_count();
  if (tiles.cols() != t * t * t || tiles.rows() % count != 0 ||
      tiles.rows() == 0) {
    throw ShapeError("input tile gradient does not match tile geometry");
  }
  const std::size_t channels = tiles.rows() / count;
  const auto [D, H, W] = geom.in_dims;
  const auto [nd, nh, nw] = geom.tiles;
  const auto pad = static_cast<std::ptrdiff_t>(geom.pad);
  Tensor<T> out({channels, D, H, W});
  T* dst = out.data().data();
  std::size_t k = 0;
  for (std::size_t td = 0; td < nd; ++td) {
    for (std::size_t th = 0; th < nh; ++th) {
      for (std::size_t tw = 0; tw < nw; ++tw, ++k) {
        const auto d0 = static_cast<std::ptrdiff_t>(td * m) - pad;
        const auto h0 = static_cast<std::ptrdiff_t>(th * m) - pad;
        const auto w0 = static_cast<std::ptrdiff_t>(tw * m) - pad;
        for (std::size_t c = 0; c < channels; ++c) {
          const T* row = tiles.row(k * channels + c).data();
          T* plane = dst + c * D * H * W;
          for (std::size_t u = 0; u < t; ++u) {
            const std::ptrdiff_t d = d0 + static_cast<std::ptrdiff_t>(u);
            if (d < 0 || d >= static_cast<std::ptrdiff_t>(D)) continue;
            for (std::size_t v = 0; v < t; ++v) {
              const std::ptrdiff_t h = h0 + static_cast<std::ptrdiff_t>(v);
              if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
              for (std::size_t w = 0; w < t; ++w) {
                const std::ptrdiff_t x = w0 + static_cast<std::ptrdiff_t>(w);
                if (x < 0 || x >= static_cast<std::ptrdiff_t>(W)) continue;
                plane[(static_cast<std::size_t>(d) * H +
                       static_cast<std::size_t>(h)) *
                          W +
                      static_cast<std::size_t>(x)] += row[(u * t + v) * t + w];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

#define WINO3D_INSTANTIATE(T)                                               \
  template std::pair<Matrix<T>, TileGeometry> disassemble_input(            \
      const Tensor<T>&, const WinogradSpec&, std::size_t);                  \
  template void disassemble_input_into(const Tensor<T>&,                    \
                                       const TileGeometry&, Matrix<T>&);    \
  template Tensor<T> reassemble_output(const Matrix<T>&,                    \
                                       const TileGeometry&);                \
  template Matrix<T> disassemble_output(const Tensor<T>&,                   \
                                        const TileGeometry&);               \
  template Tensor<T> overlap_add_input(const Matrix<T>&, const TileGeometry&);

WINO3D_INSTANTIATE(float)
WINO3D_INSTANTIATE(double)
#undef WINO3D_INSTANTIATE

}  // namespace wino3d
