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

#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "wino3d/model_io.hpp"
#include "wino3d/pruning.hpp"

namespace fs = std::filesystem;
using namespace wino3d;

namespace {

constexpr std::size_t kFileHeader = 4 + 2 + 2;
constexpr std::size_t kLayerHeader = 1 + 4 + 4 + 1 + 1 + 1;

Model<float> lowrank_model(std::uint64_t seed) {
  auto model = convert_to_winograd(make_tiny_c3d<float>(seed));
  enable_lowrank(model, {8, 4}, 0.1);
  auto& w = std::get<WinogradLayer<float>>(model.layers[3]);
  std::vector<double> scores = oracle::gaussian(seed, 64);
  w.set_mask(build_mask(scores, 20).mask);
  return model;
}

CompactLayer<float> random_compact(std::uint64_t seed, std::size_t co,
                                   std::size_t ci, std::size_t l) {
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), std::mt19937_64(seed));
  idx.resize(l);
  std::sort(idx.begin(), idx.end());
  return CompactLayer<float>(co, ci, 1, oracle::random_matrix(seed, co * ci, l).cast<float>(),
                             idx);
}

void expect_same_predictions(const Model<float>& a, const Model<float>& b) {
  const auto data = synth_dataset<float>(77, 4, 8, {1, 8, 16, 16});
  EXPECT_EQ(predict_all(a, data, 1), predict_all(b, data, 1));
}

}  // namespace

TEST(ModelIo, SpatialModelRoundTrip) {
  const auto model = make_tiny_c3d<float>(1);
  const auto bytes = encode_model(model);
  const auto back = decode_model<float>(bytes);
  EXPECT_EQ(back.mode, Mode::kFS);
  EXPECT_EQ(encode_model(back), bytes);
  expect_same_predictions(model, back);
}

TEST(ModelIo, WinogradModelRoundTrip) {
  const auto model = convert_to_winograd(make_tiny_c3d<float>(2));
  const auto back = decode_model<float>(encode_model(model));
  EXPECT_EQ(back.mode, Mode::kFW);
  EXPECT_EQ(encode_model(back), encode_model(model));
  expect_same_predictions(model, back);
}

TEST(ModelIo, LowrankMaskedModelRoundTrip) {
  const auto model = lowrank_model(3);
  const auto back = decode_model<float>(encode_model(model));
  EXPECT_EQ(back.mode, Mode::kLR);
  for (std::size_t i : model.winograd_indices()) {
    const auto& a = std::get<WinogradLayer<float>>(model.layers[i]);
    const auto& b = std::get<WinogradLayer<float>>(back.layers[i]);
    EXPECT_EQ(a.winograd_weight(), b.winograd_weight());
    EXPECT_EQ(a.row_factor(), b.row_factor());
    EXPECT_EQ(a.col_factor(), b.col_factor());
    EXPECT_EQ(a.mask(), b.mask());
  }
  expect_same_predictions(model, back);
}

TEST(ModelIo, MaskedDenseLayerUsesRankZero) {
  auto model = convert_to_winograd(make_tiny_c3d<float>(4));
  auto& w = std::get<WinogradLayer<float>>(model.layers[1]);
  w.set_mask(build_mask(oracle::gaussian(1, 64), 10).mask);
  const auto back = decode_model<float>(encode_model(model));
  const auto& b = std::get<WinogradLayer<float>>(back.layers[1]);
  EXPECT_FALSE(b.has_lowrank());
  EXPECT_EQ(b.kept_columns(), 10u);
  EXPECT_EQ(back.mode, Mode::kFW);
  expect_same_predictions(model, back);
}

TEST(ModelIo, CompactModelRoundTripAndFile) {
  const auto model = finalize_model(lowrank_model(5));
  const auto path = fs::temp_directory_path() / "wino3d_test_compact.lrw";
  save_model(model, path);
  const auto back = load_model<float>(path);
  EXPECT_EQ(encode_model(back), encode_model(model));
  expect_same_predictions(model, back);
  fs::remove(path);
}

TEST(ModelIo, CompactPayloadSixteenColumns) {
  Model<float> model;
  model.layers.emplace_back(random_compact(6, 16, 16, 16));
  const auto bytes = encode_model(model);
  const std::size_t payload = bytes.size() - kFileHeader - kLayerHeader - 2;
  EXPECT_EQ(payload, 16u * 16u * 16u * 4u + 32u);
  Model<float> dense;
  dense.layers.emplace_back(WinogradLayer<float>(16, 16, 1, Matrix<float>(256, 64)));
  EXPECT_EQ(encode_model(dense).size() - kFileHeader - kLayerHeader, 65536u);
}

TEST(ModelIo, CompactPayloadClosedFormOverRandomConfigs) {
  std::mt19937_64 eng(99);
  for (int i = 0; i < 10; ++i) {
    const std::size_t l = 1 + eng() % 64, co = 1 + eng() % 24, ci = 1 + eng() % 24;
    Model<float> model;
    model.layers.emplace_back(random_compact(static_cast<std::uint64_t>(i), co, ci, l));
    const auto bytes = encode_model(model);
    EXPECT_EQ(bytes.size(), kFileHeader + kLayerHeader + 2 + 2 * l + 4 * co * ci * l);
    EXPECT_EQ(encode_model(decode_model<float>(bytes)), bytes);
  }
}

TEST(ModelIo, HeaderFieldsLittleEndian) {
  Model<float> model;
  model.layers.emplace_back(random_compact(7, 3, 258, 5));
  const auto b = encode_model(model);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "LRW3");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6], 1);
  EXPECT_EQ(b[8], 3);           // kind
  EXPECT_EQ(b[9], 3);           // C_o
  EXPECT_EQ(b[13], 2);          // C_i = 258
  EXPECT_EQ(b[14], 1);
  EXPECT_EQ(b[17], 2);          // m
  EXPECT_EQ(b[18], 3);          // r
  EXPECT_EQ(b[19], 1);          // pad
  EXPECT_EQ(b[20], 5);          // l
}

TEST(ModelIo, BadMagicIsFormatError) {
  auto bytes = encode_model(make_tiny_c3d<float>(8));
  bytes[0] = 'X';
  EXPECT_THROW(decode_model<float>(bytes), FormatError);
}

TEST(ModelIo, BadVersionIsFormatError) {
  auto bytes = encode_model(make_tiny_c3d<float>(8));
  bytes[4] = 9;
  EXPECT_THROW(decode_model<float>(bytes), FormatError);
}

TEST(ModelIo, NonAscendingLocationsIsFormatError) {
  Model<float> model;
  model.layers.emplace_back(random_compact(9, 2, 2, 4));
  auto bytes = encode_model(model);
  const std::size_t loc = kFileHeader + kLayerHeader + 2;
  std::swap(bytes[loc], bytes[loc + 2]);
  std::swap(bytes[loc + 1], bytes[loc + 3]);
  EXPECT_THROW(decode_model<float>(bytes), FormatError);
}

TEST(ModelIo, TruncatedAndTrailingBytesRejected) {
  auto bytes = encode_model(make_tiny_c3d<float>(10));
  auto shorter = bytes;
  shorter.resize(shorter.size() - 1);
  EXPECT_THROW(decode_model<float>(shorter), FormatError);
  bytes.push_back(0);
  EXPECT_THROW(decode_model<float>(bytes), FormatError);
}

TEST(ModelIo, UnknownKindRejected) {
  auto bytes = encode_model(make_tiny_c3d<float>(11));
  bytes[kFileHeader] = 42;
  EXPECT_THROW(decode_model<float>(bytes), FormatError);
}
