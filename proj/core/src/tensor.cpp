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

#include "wino3d/tensor.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "wino3d/binary_io.hpp"

namespace wino3d {

namespace {
constexpr std::string_view kTensorMagic = "LRT1";
}  // namespace

std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace detail

template <RealScalar T>
std::vector<std::uint8_t> encode_tensor(const Tensor<T>& t) {
  if (t.ndim() > 255) throw ShapeError("tensor rank exceeds 255");
  detail::ByteWriter w;
  w.bytes(kTensorMagic);
  w.put(static_cast<std::uint8_t>(dtype_of<T>()));
  w.put(static_cast<std::uint8_t>(t.ndim()));
  for (std::size_t d : t.dims()) w.put(static_cast<std::uint64_t>(d));
  w.put_all(t.data());
  return std::move(w.buffer());
}

namespace {

template <RealScalar T>
Tensor<T> decode_payload(detail::ByteReader& r, Dims dims) {
  const std::size_t n = dims_product(dims);
  if (r.remaining() / sizeof(T) < n) {
    throw FormatError("truncated tensor payload: expected " +
                      std::to_string(n) + " elements");
  }
  std::vector<T> data(n);
  for (auto& v : data) v = r.get<T>();
  if (r.remaining() != 0) throw FormatError("trailing bytes after payload");
  return Tensor<T>(std::move(dims), std::move(data));
}

}  // namespace

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kTensorMagic.size() ||
      r.bytes(kTensorMagic.size()) != kTensorMagic) {
    throw FormatError("bad tensor magic");
  }
  const auto dtype = r.get<std::uint8_t>();
  const auto ndim = r.get<std::uint8_t>();
  if (ndim == 0) throw FormatError("tensor with zero axes");
  Dims dims(ndim);
  for (auto& d : dims) {
    d = static_cast<std::size_t>(r.get<std::uint64_t>());
    if (d == 0) throw FormatError("tensor dim of zero");
  }
  switch (dtype) {
    case static_cast<std::uint8_t>(DType::kF32):
      return decode_payload<float>(r, std::move(dims));
    case static_cast<std::uint8_t>(DType::kF64):
      return decode_payload<double>(r, std::move(dims));
    default:
      throw FormatError("unknown dtype code " + std::to_string(dtype));
  }
}

template <RealScalar T>
void save_tensor(const Tensor<T>& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  detail::write_file(path, bytes);
}

AnyTensor load_tensor_any(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_tensor(bytes);
}

template <RealScalar T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  AnyTensor any = load_tensor_any(path);
  if (auto* t = std::get_if<Tensor<T>>(&any)) return std::move(*t);
  throw FormatError("tensor in " + path.string() + " has a different dtype");
}

template std::vector<std::uint8_t> encode_tensor(const Tensor<float>&);
template std::vector<std::uint8_t> encode_tensor(const Tensor<double>&);
template void save_tensor(const Tensor<float>&, const std::filesystem::path&);
template void save_tensor(const Tensor<double>&, const std::filesystem::path&);
template Tensor<float> load_tensor(const std::filesystem::path&);
template Tensor<double> load_tensor(const std::filesystem::path&);

}  // namespace wino3d
