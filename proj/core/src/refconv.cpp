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

#include "wino3d/refconv.hpp"

#include <algorithm>

namespace wino3d {

template <RealScalar T>
std::array<std::size_t, 3> ConvProblem<T>::output_dims() const {
  if (input.ndim() != 4) {
    throw ShapeError("conv input must be C x D x H x W, got " +
                     dims_to_string(input.dims()));
  }
  if (kernel.ndim() != 5 || kernel.dim(2) != kernel.dim(3) ||
      kernel.dim(2) != kernel.dim(4)) {
    throw ShapeError("conv kernel must be C_o x C_i x r x r x r, got " +
                     dims_to_string(kernel.dims()));
  }
  if (kernel.dim(1) != input.dim(0)) {
    throw ShapeError("kernel expects " + std::to_string(kernel.dim(1)) +
                     " input channels, input has " +
                     std::to_string(input.dim(0)));
  }
  const std::size_t r = kernel.dim(2);
  std::array<std::size_t, 3> out{};
  for (std::size_t a = 0; a < 3; ++a) {
    const std::size_t padded = input.dim(a + 1) + 2 * pad;
    if (padded < r) {
      throw ShapeError("padded extent " + std::to_string(padded) +
                       " smaller than kernel " + std::to_string(r));
    }
    out[a] = padded - r + 1;
  }
  return out;
}

template struct ConvProblem<float>;
template struct ConvProblem<double>;

template <RealScalar T>
Tensor<T> direct_conv3d(const ConvProblem<T>& p, OpCounter* counter) {
  const auto [Do, Ho, Wo] = p.output_dims();
  const std::size_t Ci = p.in_channels();
  const std::size_t Co = p.out_channels();
  const std::size_t r = p.kernel_size();
  const std::size_t Di = p.input.dim(1);
  const std::size_t Hi = p.input.dim(2);
  const std::size_t Wi = p.input.dim(3);
  const auto pad = static_cast<std::ptrdiff_t>(p.pad);
  Tensor<T> out({Co, Do, Ho, Wo});
  std::uint64_t mults = 0;
  for (std::size_t n = 0; n < Co; ++n) {
    for (std::size_t od = 0; od < Do; ++od) {
      for (std::size_t oh = 0; oh < Ho; ++oh) {
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          T acc = T{0};
          for (std::size_t c = 0; c < Ci; ++c) {
            for (std::size_t u = 0; u < r; ++u) {
              const auto d = static_cast<std::ptrdiff_t>(od + u) - pad;
              for (std::size_t v = 0; v < r; ++v) {
                const auto h = static_cast<std::ptrdiff_t>(oh + v) - pad;
                for (std::size_t w = 0; w < r; ++w) {
                  const auto x = static_cast<std::ptrdiff_t>(ow + w) - pad;
                  ++mults;
                  if (d < 0 || h < 0 || x < 0 ||
                      d >= static_cast<std::ptrdiff_t>(Di) ||
                      h >= static_cast<std::ptrdiff_t>(Hi) ||
                      x >= static_cast<std::ptrdiff_t>(Wi)) {
                    acc += p.kernel.at(n, c, u, v, w) * T{0};
                    continue;
                  }
                  acc += p.kernel.at(n, c, u, v, w) *
                         p.input.at(c, d, h, x);
                }
              }
            }
          }
          out.at(n, od, oh, ow) = acc;
        }
      }
    }
  }
  if (counter) counter->gemm_mults += mults;
  return out;
}

template <RealScalar T>
Matrix<T> im2col(const Tensor<T>& input, std::size_t r, std::size_t pad) {
  const std::size_t Ci = input.dim(0);
  const std::size_t Di = input.dim(1);
  const std::size_t Hi = input.dim(2);
  const std::size_t Wi = input.dim(3);
  const std::size_t Do = Di + 2 * pad - r + 1;
  const std::size_t Ho = Hi + 2 * pad - r + 1;
  const std::size_t Wo = Wi + 2 * pad - r + 1;
  const auto ipad = static_cast<std::ptrdiff_t>(pad);
  Matrix<T> cols(Ci * r * r * r, Do * Ho * Wo);
  const T* src = input.data().data();
  for (std::size_t c = 0; c < Ci; ++c) {
    for (std::size_t u = 0; u < r; ++u) {
      for (std::size_t v = 0; v < r; ++v) {
        for (std::size_t w = 0; w < r; ++w) {
          T* row = cols.row(((c * r + u) * r + v) * r + w).data();
          std::size_t p = 0;
          for (std::size_t od = 0; od < Do; ++od) {
            const auto d = static_cast<std::ptrdiff_t>(od + u) - ipad;
            const bool d_ok = d >= 0 && d < static_cast<std::ptrdiff_t>(Di);
            for (std::size_t oh = 0; oh < Ho; ++oh) {
              const auto h = static_cast<std::ptrdiff_t>(oh + v) - ipad;
              const bool h_ok =
                  d_ok && h >= 0 && h < static_cast<std::ptrdiff_t>(Hi);
              for (std::size_t ow = 0; ow < Wo; ++ow, ++p) {
                const auto x = static_cast<std::ptrdiff_t>(ow + w) - ipad;
                row[p] = (h_ok && x >= 0 && x < static_cast<std::ptrdiff_t>(Wi))
                             ? src[((c * Di + static_cast<std::size_t>(d)) * Hi +
                                    static_cast<std::size_t>(h)) *
                                       Wi +
                                   static_cast<std::size_t>(x)]
                             : T{0};
              }
            }
          }
        }
      }
    }
  }
  return cols;
}

template <RealScalar T>
Tensor<T> col2im(const Matrix<T>& cols, const Dims& input_dims, std::size_t r,
                 std::size_t pad) {
  Tensor<T> out(input_dims);
  const std::size_t Ci = input_dims[0];
  const std::size_t Di = input_dims[1];
  const std::size_t Hi = input_dims[2];
  const std::size_t Wi = input_dims[3];
  const std::size_t Do = Di + 2 * pad - r + 1;
  const std::size_t Ho = Hi + 2 * pad - r + 1;
  const std::size_t Wo = Wi + 2 * pad - r + 1;
  if (cols.rows() != Ci * r * r * r || cols.cols() != Do * Ho * Wo) {
    throw ShapeError("col2im: column matrix does not match input dims");
  }
  const auto ipad = static_cast<std::ptrdiff_t>(pad);
  T* dst = out.data().data();
  for (std::size_t c = 0; c < Ci; ++c) {
    for (std::size_t u = 0; u < r; ++u) {
      for (std::size_t v = 0; v < r; ++v) {
        for (std::size_t w = 0; w < r; ++w) {
          const T* row = cols.row(((c * r + u) * r + v) * r + w).data();
          std::size_t p = 0;
          for (std::size_t od = 0; od < Do; ++od) {
            const auto d = static_cast<std::ptrdiff_t>(od + u) - ipad;
            for (std::size_t oh = 0; oh < Ho; ++oh) {
              const auto h = static_cast<std::ptrdiff_t>(oh + v) - ipad;
              for (std::size_t ow = 0; ow < Wo; ++ow, ++p) {
                const auto x = static_cast<std::ptrdiff_t>(ow + w) - ipad;
                if (d < 0 || h < 0 || x < 0 ||
                    d >= static_cast<std::ptrdiff_t>(Di) ||
                    h >= static_cast<std::ptrdiff_t>(Hi) ||
                    x >= static_cast<std::ptrdiff_t>(Wi)) {
                  continue;
                }
                dst[((c * Di + static_cast<std::size_t>(d)) * Hi +
                     static_cast<std::size_t>(h)) *
                        Wi +
                    static_cast<std::size_t>(x)] += row[p];
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
Tensor<T> im2col_conv3d(const ConvProblem<T>& p, OpCounter* counter) {
  const auto [Do, Ho, Wo] = p.output_dims();
  const std::size_t Co = p.out_channels();
  const std::size_t r = p.kernel_size();
  const Matrix<T> cols = im2col(p.input, r, p.pad);
  const std::size_t K = cols.rows();
  const std::size_t P = cols.cols();
  const T* kernel = p.kernel.data().data();

  Tensor<T> out({Co, Do, Ho, Wo});
  T* dst = out.data().data();
  // (C_o x C_i r³) · (C_i r³ x P), blocked over output voxels. Each output
  // accumulates over q in ascending order, matching direct_conv3d.
  constexpr std::size_t kBlock = 256;
  for (std::size_t p0 = 0; p0 < P; p0 += kBlock) {
    const std::size_t p1 = std::min(P, p0 + kBlock);
    for (std::size_t o = 0; o < Co; ++o) {
      T* orow = dst + o * P;
      const T* krow = kernel + o * K;
      for (std::size_t q = 0; q < K; ++q) {
        const T wq = krow[q];
        const T* crow = cols.row(q).data();
        for (std::size_t i = p0; i < p1; ++i) orow[i] += wq * crow[i];
      }
      if (counter) counter->gemm_mults += K * (p1 - p0);
    }
  }
  return out;
}

template <RealScalar T>
ConvGrads<T> conv3d_backward(const ConvProblem<T>& p, const Tensor<T>& d_out) {
  const auto [Do, Ho, Wo] = p.output_dims();
  const std::size_t Co = p.out_channels();
  const std::size_t r = p.kernel_size();
  if (d_out.dims() != Dims{Co, Do, Ho, Wo}) {
    throw ShapeError("conv3d_backward: gradient shape " +
                     dims_to_string(d_out.dims()) + " does not match output");
  }
  const Matrix<T> cols = im2col(p.input, r, p.pad);
  const std::size_t K = cols.rows();
  const std::size_t P = cols.cols();
  const T* g = d_out.data().data();
  const T* kernel = p.kernel.data().data();

  Tensor<T> d_kernel(p.kernel.dims());
  T* dk = d_kernel.data().data();
  for (std::size_t o = 0; o < Co; ++o) {
    const T* grow = g + o * P;
    for (std::size_t q = 0; q < K; ++q) {
      const T* crow = cols.row(q).data();
      T acc = T{0};
      for (std::size_t i = 0; i < P; ++i) acc += grow[i] * crow[i];
      dk[o * K + q] = acc;
    }
  }

  Matrix<T> d_cols(K, P);
  for (std::size_t o = 0; o < Co; ++o) {
    const T* grow = g + o * P;
    for (std::size_t q = 0; q < K; ++q) {
      const T wq = kernel[o * K + q];
      T* drow = d_cols.row(q).data();
      for (std::size_t i = 0; i < P; ++i) drow[i] += wq * grow[i];
    }
  }
  return {std::move(d_kernel), col2im(d_cols, p.input.dims(), r, p.pad)};
}

#define WINO3D_INSTANTIATE(T)                                                 \
  template Tensor<T> direct_conv3d(const ConvProblem<T>&, OpCounter*);        \
  template Tensor<T> im2col_conv3d(const ConvProblem<T>&, OpCounter*);        \
  template Matrix<T> im2col(const Tensor<T>&, std::size_t, std::size_t);      \
  template Tensor<T> col2im(const Matrix<T>&, const Dims&, std::size_t,       \
                            std::size_t);                                     \
  template ConvGrads<T> conv3d_backward(const ConvProblem<T>&, const Tensor<T>&);

WINO3D_INSTANTIATE(float)
WINO3D_INSTANTIATE(double)
#undef WINO3D_INSTANTIATE

}  // namespace wino3d
