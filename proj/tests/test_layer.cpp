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

#include "oracles.hpp"
#include "wino3d/layer.hpp"

using namespace wino3d;

namespace {

struct Case {
  Tensor<double> input;
  Tensor<double> kernel;
  std::size_t pad;
};

Case random_case(std::uint64_t seed, std::size_t max_ch = 4, std::size_t max_sp = 10) {
  std::mt19937_64 eng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng);
  };
  const std::size_t ci = pick(1, max_ch), co = pick(1, max_ch), pad = pick(0, 1);
  const std::size_t lo = pad ? 1 : 3;
  const std::size_t d = pick(lo, max_sp), h = pick(lo, max_sp), w = pick(lo, max_sp);
  return {oracle::random_tensor(seed * 7 + 1, {ci, d, h, w}),
          oracle::random_tensor(seed * 7 + 2, {co, ci, 3, 3, 3}), pad};
}

WinogradLayer<double> random_lowrank_layer(std::uint64_t seed, std::size_t ci,
                                           std::size_t co, std::size_t rank) {
  auto layer = WinogradLayer<double>::from_spatial(
      oracle::random_tensor(seed, {co, ci, 3, 3, 3}), 1);
  layer.set_lowrank(oracle::random_matrix(seed + 1, co * ci, rank, 0.3),
                    oracle::random_matrix(seed + 2, rank, 64, 0.3));
  return layer;
}

std::vector<std::uint8_t> random_mask(std::uint64_t seed, std::size_t kept) {
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), std::mt19937_64(seed));
  std::vector<std::uint8_t> mask(64, 0);
  for (std::size_t i = 0; i < kept; ++i) mask[idx[i]] = 1;
  return mask;
}

Tensor<double> ones(const Dims& dims) {
  return Tensor<double>(dims, std::vector<double>(dims_product(dims), 1.0));
}

}  // namespace

TEST(SpatialToWinograd, ZeroStaysZero) {
  const auto gw = spatial_to_winograd(Matrix<double>(6, 27), transform_set(kF2x3));
  for (double v : gw.storage()) EXPECT_EQ(v, 0.0);
}

TEST(SpatialToWinograd, DeltaRowMatchesNestedTransform) {
  const auto bm = base_matrices(kF2x3);
  for (std::size_t pos = 0; pos < 27; ++pos) {
    Matrix<double> g(1, 27);
    g(0, pos) = 1.0;
    const auto gw = spatial_to_winograd(g, transform_set(kF2x3));
    Tensor<double> delta({3, 3, 3});
    delta[pos] = 1.0;
    EXPECT_EQ(gw.storage(), nested_kernel_transform(delta, bm).storage());
  }
}

TEST(SpatialToWinograd, RearrangeRowOrder) {
  const auto k = oracle::random_tensor(1, {3, 2, 3, 3, 3});
  const auto g = rearrange_kernel(k);
  ASSERT_EQ(g.rows(), 6u);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t q = 0; q < 27; ++q)
        ASSERT_EQ(g(2 * n + c, q), k[(n * 2 + c) * 27 + q]);
}

TEST(ForwardDense, OnesGiveTwentySeven) {
  const auto layer = WinogradLayer<double>::from_spatial(ones({1, 1, 3, 3, 3}), 0);
  const auto out = forward_dense(layer, ones({1, 4, 4, 4})).output;
  ASSERT_EQ(out.dims(), (Dims{1, 2, 2, 2}));
  for (double v : out.storage()) EXPECT_NEAR(v, 27.0, 1e-12);
}

TEST(ForwardDense, ZeroInputGivesZero) {
  const auto c = random_case(3);
  const auto layer = WinogradLayer<double>::from_spatial(c.kernel, c.pad);
  const auto out = forward_dense(layer, Tensor<double>(c.input.dims())).output;
  for (double v : out.storage()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardDense, FiftySeededProblemsMatchOracleF64) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c = random_case(seed);
    const auto layer = WinogradLayer<double>::from_spatial(c.kernel, c.pad);
    const auto got = forward_dense(layer, c.input).output;
    const auto want = oracle::conv3d(c.input, c.kernel, c.pad);
    ASSERT_EQ(got.dims(), want.dims());
    ASSERT_LE(oracle::rel_err(got.storage(), want.storage()), 1e-12) << seed;
  }
}

TEST(ForwardDense, FiftySeededProblemsMatchOracleF32) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c = random_case(seed + 1000);
    const auto layer = WinogradLayer<float>::from_spatial(c.kernel.cast<float>(), c.pad);
    const auto got = forward_dense(layer, c.input.cast<float>()).output;
    const auto want = oracle::conv3d(c.input, c.kernel, c.pad);
    std::vector<double> g(got.data().begin(), got.data().end());
    ASSERT_LE(oracle::rel_err(g, want.storage()), 1e-5) << seed;
  }
}

TEST(ForwardDense, ThreadCountDoesNotChangeBits) {
  const auto c = random_case(11, 6, 12);
  const auto layer = WinogradLayer<double>::from_spatial(c.kernel, c.pad);
  const auto a = forward_dense(layer, c.input, nullptr, 1).output;
  const auto b = forward_dense(layer, c.input, nullptr, 3).output;
  EXPECT_EQ(a, b);
}

TEST(ForwardDense, ChannelMismatchIsShapeError) {
  const auto layer = WinogradLayer<double>::from_spatial(ones({2, 3, 3, 3, 3}), 1);
  EXPECT_THROW(forward_dense(layer, ones({2, 4, 4, 4})), ShapeError);
}

TEST(ForwardLowrank, ZeroDeltaIsBitwiseDense) {
  auto layer = random_lowrank_layer(5, 3, 2, 4);
  layer.set_lowrank(Matrix<double>(6, 4), oracle::random_matrix(9, 4, 64));
  const auto in = oracle::random_tensor(6, {3, 5, 6, 4});
  EXPECT_EQ(forward_lowrank(layer, in).output, forward_dense(layer, in).output);
}

TEST(ForwardLowrank, FullMaskMatchesFoldedDense) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto layer = random_lowrank_layer(seed, 2, 3, 5);
    auto folded = layer;
    folded.clear_lowrank();
    folded.set_winograd_weight(oracle::matmul(layer.row_factor(), layer.col_factor()));
    auto& w = folded.mutable_winograd_weight();
    for (std::size_t i = 0; i < w.size(); ++i)
      w.storage()[i] += layer.winograd_weight().storage()[i];
    const auto in = oracle::random_tensor(seed + 50, {2, 5, 5, 5});
    const auto a = forward_lowrank(layer, in).output;
    const auto b = forward_dense(folded, in).output;
    ASSERT_LE(max_rel_diff(a.data(), b.data()), 1e-12);
  }
}

TEST(ForwardLowrank, MaskMatchesColumnZeroedDense) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto layer = random_lowrank_layer(seed + 20, 3, 2, 3);
    layer.set_mask(random_mask(seed, 10 + seed * 3));
    Matrix<double> eff = oracle::matmul(layer.row_factor(), layer.col_factor());
    for (std::size_t r = 0; r < eff.rows(); ++r)
      for (std::size_t j = 0; j < 64; ++j)
        eff(r, j) = layer.mask()[j] ? eff(r, j) + layer.winograd_weight()(r, j) : 0.0;
    WinogradLayer<double> dense(2, 3, 1, eff);
    const auto in = oracle::random_tensor(seed + 70, {3, 6, 4, 5});
    ASSERT_LE(max_rel_diff(forward_lowrank(layer, in).output.data(),
                           forward_dense(dense, in).output.data()),
              1e-12);
  }
}

TEST(Compact, FullMaskKeepsEverything) {
  const auto layer = random_lowrank_layer(1, 2, 2, 2);
  const auto cl = compact(layer);
  EXPECT_EQ(cl.kept_columns(), 64u);
  EXPECT_EQ(cl.weight(), layer.effective_weight());
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(cl.locations()[i], i);
}

TEST(Compact, SingleColumnFive) {
  auto layer = random_lowrank_layer(2, 2, 3, 2);
  std::vector<std::uint8_t> mask(64, 0);
  mask[5] = 1;
  layer.set_mask(mask);
  const auto cl = compact(layer);
  ASSERT_EQ(cl.locations(), std::vector<std::size_t>{5});
  const auto eff = layer.effective_weight();
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(cl.weight()(r, 0), eff(r, 5));
  EXPECT_EQ(scatter_columns(cl.weight(), cl.locations(), 64), eff);
}

TEST(Compact, EmptyMaskRejected) {
  auto layer = random_lowrank_layer(3, 1, 1, 1);
  EXPECT_THROW(layer.set_mask(std::vector<std::uint8_t>(64, 0)), EmptyMask);
  EXPECT_THROW(CompactLayer<double>(1, 1, 0, Matrix<double>(1, 0), {}), EmptyMask);
}

TEST(Compact, BadLocationsRejected) {
  EXPECT_THROW(CompactLayer<double>(1, 1, 0, Matrix<double>(1, 2), {3, 3}), ShapeError);
  EXPECT_THROW(CompactLayer<double>(1, 1, 0, Matrix<double>(1, 2), {4, 2}), ShapeError);
  EXPECT_THROW(CompactLayer<double>(1, 1, 0, Matrix<double>(1, 1), {64}), ShapeError);
}

TEST(ForwardSparse, FullMaskMatchesDense) {
  const auto c = random_case(21);
  const auto layer = WinogradLayer<double>::from_spatial(c.kernel, c.pad);
  const auto a = forward_sparse(compact(layer), c.input);
  const auto b = forward_dense(layer, c.input).output;
  EXPECT_LE(max_rel_diff(a.data(), b.data()), 1e-12);
}

TEST(ForwardSparse, HundredSeededPairsMatchLowrank) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 eng(seed);
    const std::size_t ci = 1 + eng() % 4, co = 1 + eng() % 4;
    auto layer = random_lowrank_layer(seed + 300, ci, co, 1 + eng() % 8);
    layer.set_mask(random_mask(seed, 1 + eng() % 64));
    const auto in = oracle::random_tensor(seed + 900, {ci, 3 + eng() % 5, 3 + eng() % 5,
                                                       3 + eng() % 5});
    const auto a = forward_sparse(compact(layer), in);
    const auto b = forward_lowrank(layer, in).output;
    ASSERT_LE(max_rel_diff(a.data(), b.data()), 1e-12) << seed;
  }
}

TEST(ForwardSparse, MultiplyCounterIsClosedForm) {
  auto layer = random_lowrank_layer(4, 4, 4, 2);
  layer.set_mask(random_mask(4, 32));
  const auto cl = compact(layer);
  OpCounter counter;
  const Tensor<double> in = oracle::random_tensor(5, {4, 6, 6, 6});
  forward_sparse(cl, in, &counter);
  const auto g = make_tile_geometry({6, 6, 6}, 1, kF2x3);
  EXPECT_EQ(counter.ew_mults, g.tile_count() * 4 * 4 * 32);
  OpCounter dense_counter;
  forward_dense(layer, in, &dense_counter);
  EXPECT_EQ(dense_counter.ew_mults, g.tile_count() * 4 * 4 * 64);
}

TEST(OpCounts, HandExample) {
  const auto c = op_counts(4, 4, 8, kF2x3, 32);
  EXPECT_EQ(c.ew_mults, 4096u);
  EXPECT_EQ(c.dense_ew_mults, 8192u);
  const auto full = op_counts(3, 5, 7, kF2x3, 64);
  EXPECT_EQ(full.ew_mults, full.dense_ew_mults);
}

TEST(OpCounts, RatioIsExact) {
  for (std::size_t l = 1; l <= 64; ++l) {
    const auto c = op_counts(3, 5, 11, kF2x3, l);
    EXPECT_EQ(c.ew_mults * 64, c.dense_ew_mults * l);
  }
}

TEST(OpCounts, OutOfRangeRejected) {
  EXPECT_THROW(op_counts(4, 4, 8, kF2x3, 0), RankError);
  EXPECT_THROW(op_counts(4, 4, 8, kF2x3, 65), RankError);
  EXPECT_THROW(op_counts(0, 4, 8, kF2x3, 1), ShapeError);
}

TEST(TrainableParameters, FormulaHolds) {
  WinogradLayer<double> layer(64, 64, 1, Matrix<double>(4096, 64));
  EXPECT_EQ(layer.trainable_parameters(), 262144u);
  layer.set_lowrank(Matrix<double>(4096, 8), Matrix<double>(8, 64));
  EXPECT_EQ(layer.trainable_parameters(), 33280u);
  EXPECT_EQ(layer.trainable_parameters(), 64u * 64u * 8u + 8u * 64u);
}

TEST(Lowrank, RankOutOfRangeRejected) {
  WinogradLayer<double> layer(1, 1, 0, Matrix<double>(1, 64));
  EXPECT_THROW(layer.set_lowrank(Matrix<double>(1, 0), Matrix<double>(0, 64)), RankError);
  EXPECT_THROW(layer.set_lowrank(Matrix<double>(1, 65), Matrix<double>(65, 64)), RankError);
  EXPECT_THROW(layer.set_lowrank(Matrix<double>(2, 3), Matrix<double>(3, 64)), ShapeError);
}

TEST(Backward, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto layer = random_lowrank_layer(seed + 10, 1 + seed % 2, 1 + (seed / 2) % 2, 2);
    if (seed % 3 == 2) layer.set_mask(random_mask(seed, 40));
    const auto in = oracle::random_tensor(seed + 60, {layer.in_channels(), 4, 3, 5});
    const auto res = forward_lowrank(layer, in);
    const auto w = oracle::random_tensor(seed + 61, res.output.dims());
    const auto grads = backward(layer, res.cache, w);
    auto loss = [&](const WinogradLayer<double>& l, const Tensor<double>& x) {
      const auto o = forward_lowrank(l, x).output;
      double s = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * w[i];
      return s;
    };
    const auto fd_r = oracle::central_difference(
        [&](const std::vector<double>& v) {
          auto l = layer;
          l.mutable_row_factor().storage() = v;
          return loss(l, in);
        },
        layer.row_factor().storage(), 1e-5);
    const auto fd_c = oracle::central_difference(
        [&](const std::vector<double>& v) {
          auto l = layer;
          l.mutable_col_factor().storage() = v;
          return loss(l, in);
        },
        layer.col_factor().storage(), 1e-5);
    const auto fd_i = oracle::central_difference(
        [&](const std::vector<double>& v) {
          return loss(layer, Tensor<double>(in.dims(), v));
        },
        in.storage(), 1e-5);
    EXPECT_LE(oracle::rel_err(grads.d_row_factor.storage(), fd_r), 1e-6) << seed;
    EXPECT_LE(oracle::rel_err(grads.d_col_factor.storage(), fd_c), 1e-6) << seed;
    EXPECT_LE(oracle::rel_err(grads.d_input.storage(), fd_i), 1e-6) << seed;
  }
}

TEST(Backward, DenseWeightGradientMatchesCentralDifferences) {
  const auto c = random_case(8, 2, 5);
  const auto layer = WinogradLayer<double>::from_spatial(c.kernel, c.pad);
  const auto res = forward_dense(layer, c.input);
  const auto w = oracle::random_tensor(81, res.output.dims());
  const auto grads = backward(layer, res.cache, w);
  const auto fd = oracle::central_difference(
      [&](const std::vector<double>& v) {
        auto l = layer;
        l.mutable_winograd_weight().storage() = v;
        const auto o = forward_dense(l, c.input).output;
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * w[i];
        return s;
      },
      layer.winograd_weight().storage(), 1e-5);
  EXPECT_LE(oracle::rel_err(grads.d_effective.storage(), fd), 1e-6);
}

TEST(Backward, ZeroGradientGivesZero) {
  const auto layer = random_lowrank_layer(3, 2, 2, 3);
  const auto in = oracle::random_tensor(4, {2, 4, 4, 4});
  const auto res = forward_lowrank(layer, in);
  const auto g = backward(layer, res.cache, Tensor<double>(res.output.dims()));
  for (double v : g.d_row_factor.storage()) EXPECT_EQ(v, 0.0);
  for (double v : g.d_col_factor.storage()) EXPECT_EQ(v, 0.0);
  for (double v : g.d_input.storage()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, LinearInOutputGradient) {
  const auto layer = random_lowrank_layer(6, 2, 3, 3);
  const auto in = oracle::random_tensor(7, {2, 5, 4, 4});
  const auto res = forward_lowrank(layer, in);
  const auto w = oracle::random_tensor(8, res.output.dims());
  auto w2 = w;
  for (auto& v : w2.storage()) v *= 2.0;
  const auto a = backward(layer, res.cache, w);
  const auto b = backward(layer, res.cache, w2);
  for (std::size_t i = 0; i < a.d_row_factor.size(); ++i)
    EXPECT_EQ(2.0 * a.d_row_factor.storage()[i], b.d_row_factor.storage()[i]);
  for (std::size_t i = 0; i < a.d_input.size(); ++i)
    EXPECT_EQ(2.0 * a.d_input[i], b.d_input[i]);
}

TEST(Backward, StaleCacheIsCacheError) {
  auto layer = random_lowrank_layer(9, 1, 1, 1);
  const auto in = oracle::random_tensor(10, {1, 4, 4, 4});
  const auto res = forward_lowrank(layer, in);
  layer.mutable_col_factor()(0, 0) += 1.0;
  EXPECT_THROW(backward(layer, res.cache, res.output), CacheError);
  const auto other = random_lowrank_layer(9, 1, 1, 1);
  EXPECT_THROW(backward(other, res.cache, res.output), CacheError);
}
