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

// Dense row-major tensors and matrices, plus the ".lrt" tensor file format.
//
// File layout (all little-endian):
//   "LRT1" | dtype u8 (0 = f32, 1 = f64) | ndim u8 | dims u64[ndim] | payload
// The payload is the row-major element array, last index fastest.

#ifndef WINO3D_TENSOR_HPP_
#define WINO3D_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <numeric>
#include <ranges>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "wino3d/error.hpp"

namespace wino3d {

template <typename T>
concept RealScalar = std::is_same_v<T, float> || std::is_same_v<T, double>;

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

template <RealScalar T>
constexpr DType dtype_of() {
  return std::is_same_v<T, float> ? DType::kF32 : DType::kF64;
}

using Dims = std::vector<std::size_t>;

inline std::size_t dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string dims_to_string(const Dims& dims);

template <RealScalar T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Dims dims) : dims_(std::move(dims)) {
    validate_dims(dims_);
    data_.assign(dims_product(dims_), T{0});
  }

  Tensor(Dims dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    validate_dims(dims_);
    if (data_.size() != dims_product(dims_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match dims " + dims_to_string(dims_));
    }
  }

  const Dims& dims() const { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t ndim() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <typename... Idx>
  T& at(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  const T& at(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != dims_.size()) {
      throw ShapeError("index arity " + std::to_string(idx.size()) +
                       " does not match tensor rank " +
                       std::to_string(dims_.size()));
    }
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) {
      off = off * dims_[axis] + i;
      ++axis;
    }
    return off;
  }

  Tensor reshaped(Dims dims) const { return Tensor(std::move(dims), data_); }

  template <RealScalar U>
  Tensor<U> cast() const {
    return Tensor<U>(dims_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  static void validate_dims(const Dims& dims) {
    if (dims.empty()) throw ShapeError("tensor dims must be non-empty");
    for (std::size_t d : dims) {
      if (d == 0) throw ShapeError("tensor dims must be >= 1");
    }
  }

  Dims dims_;
  std::vector<T> data_;
};

template <RealScalar T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, T{0}) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  template <RealScalar U>
  Matrix<U> cast() const {
    return Matrix<U>(rows_, cols_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// Small dense helpers. Accumulation runs over the inner index in ascending
// order so results are reproducible.
template <RealScalar T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " * " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      const T* brow = b.row(k).data();
      for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

template <RealScalar T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

template <RealScalar T>
double frobenius_norm(const Matrix<T>& a) {
  double s = 0.0;
  for (T v : a.data()) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

// max |a - b| / max |b|, the norm-wise relative error used throughout the
// test suites. Falls back to the absolute error when b is identically zero.
template <typename A, typename B>
double max_rel_diff(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw ShapeError("max_rel_diff: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(b[i]);
    num = std::max(num, std::abs(x - y));
    den = std::max(den, std::abs(y));
  }
  return den > 0.0 ? num / den : num;
}

template <std::ranges::contiguous_range RA, std::ranges::contiguous_range RB>
double max_rel_diff(const RA& a, const RB& b) {
  using A = std::ranges::range_value_t<RA>;
  using B = std::ranges::range_value_t<RB>;
  return max_rel_diff<A, B>(std::span<const A>(std::ranges::data(a), std::ranges::size(a)),
                            std::span<const B>(std::ranges::data(b), std::ranges::size(b)));
}

// ---------------------------------------------------------------------------
// .lrt tensor files
// ---------------------------------------------------------------------------

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

template <RealScalar T>
void save_tensor(const Tensor<T>& t, const std::filesystem::path& path);

// Reads a tensor of either dtype.
AnyTensor load_tensor_any(const std::filesystem::path& path);

// Reads a tensor and requires its stored dtype to be T.
template <RealScalar T>
Tensor<T> load_tensor(const std::filesystem::path& path);

// In-memory encode/decode; the file functions are thin wrappers.
template <RealScalar T>
std::vector<std::uint8_t> encode_tensor(const Tensor<T>& t);
AnyTensor decode_tensor(std::span<const std::uint8_t> bytes);

template <RealScalar T>
Tensor<T> matrix_to_tensor(const Matrix<T>& m) {
  return Tensor<T>({m.rows(), m.cols()}, m.storage());
}

}  // namespace wino3d

#endif  // WINO3D_TENSOR_HPP_
