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

// Reference 3D convolution: unit stride, unit dilation, zero padding,
// correlation convention (no kernel flip).

#ifndef WINO3D_REFCONV_HPP_
#define WINO3D_REFCONV_HPP_

#include <array>
#include <cstdint>

#include "wino3d/tensor.hpp"

namespace wino3d {

/// Multiply counters filled by the instrumented kernels. Counts are added at
/// loop granularity, never estimated after the fact.
struct OpCounter {
  std::uint64_t ew_mults = 0;         // Winograd-domain element-wise products
  std::uint64_t transform_mults = 0;  // input/output transform products
  std::uint64_t gemm_mults = 0;       // im2col GEMM or direct-conv products

  std::uint64_t total() const { return ew_mults + transform_mults + gemm_mults; }
};

template <RealScalar T>
struct ConvProblem {
  Tensor<T> input;   // C_i x D_i x H_i x W_i
  Tensor<T> kernel;  // C_o x C_i x r x r x r
  std::size_t pad = 0;

  std::size_t in_channels() const { return input.dim(0); }
  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t kernel_size() const { return kernel.dim(2); }
  /// Validates shapes and returns D_o, H_o, W_o.
  std::array<std::size_t, 3> output_dims() const;
};

template <RealScalar T>
Tensor<T> direct_conv3d(const ConvProblem<T>& p, OpCounter* counter = nullptr);

template <RealScalar T>
Tensor<T> im2col_conv3d(const ConvProblem<T>& p, OpCounter* counter = nullptr);

/// Unrolled patches: row q = c·r³ + (u·r + v)·r + w, column = output voxel.
template <RealScalar T>
Matrix<T> im2col(const Tensor<T>& input, std::size_t r, std::size_t pad);

/// Adjoint of im2col.
template <RealScalar T>
Tensor<T> col2im(const Matrix<T>& cols, const Dims& input_dims, std::size_t r,
                 std::size_t pad);

template <RealScalar T>
struct ConvGrads {
  Tensor<T> d_kernel;
  Tensor<T> d_input;
};

/// Gradients of a spatial convolution given dL/dO.
template <RealScalar T>
ConvGrads<T> conv3d_backward(const ConvProblem<T>& p, const Tensor<T>& d_out);

}  // namespace wino3d

#endif  // WINO3D_REFCONV_HPP_
