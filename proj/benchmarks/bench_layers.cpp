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

// Microbenchmarks for the convolution paths. Sizes are kept small enough for
// a laptop; use `wino3d bench` for the full-size CSV sweep.

#include <benchmark/benchmark.h>

#include "wino3d/bench.hpp"
#include "wino3d/layer.hpp"
#include "wino3d/pruning.hpp"
#include "wino3d/rng.hpp"

namespace {

using namespace wino3d;

BenchCase small_case() { return make_bench_case("b", 32, 32, 8, 16, 16, 11); }

void BM_Im2col(benchmark::State& state) {
  const auto bc = small_case();
  for (auto _ : state) benchmark::DoNotOptimize(im2col_conv3d(bc.problem));
}
BENCHMARK(BM_Im2col)->Unit(benchmark::kMillisecond);

void BM_WinogradForward(benchmark::State& state) {
  const auto bc = small_case();
  const auto layer = WinogradLayer<float>::from_spatial(bc.problem.kernel, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward_dense(layer, bc.problem.input).output);
}
BENCHMARK(BM_WinogradForward)->Unit(benchmark::kMillisecond);

// Arg: kept columns l out of 64.
WinogradLayer<float> masked(const BenchCase& bc, std::size_t kept) {
  auto layer = WinogradLayer<float>::from_spatial(bc.problem.kernel, 1);
  Rng rng = Rng(bc.mask_seed).split(7);
  std::vector<double> scores(64);
  for (auto& s : scores) s = rng.uniform();
  layer.set_mask(build_mask(scores, kept).mask);
  return layer;
}

void BM_SparseForward(benchmark::State& state) {
  const auto bc = small_case();
  const auto cl = compact(masked(bc, static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(forward_sparse(cl, bc.problem.input));
}
BENCHMARK(BM_SparseForward)->Arg(64)->Arg(45)->Arg(32)->Arg(19)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Elementwise(benchmark::State& state) {
  const auto bc = small_case();
  const auto cl = compact(masked(bc, static_cast<std::size_t>(state.range(0))));
  const auto geom = make_tile_geometry({8, 16, 16}, 1, kF2x3);
  const auto v = winograd_input_transform(bc.problem.input, geom);
  ElementwiseBuffers<float> buf;
  for (auto _ : state) {
    elementwise_stage(v, cl.packed(), buf);
    benchmark::ClobberMemory();
  }
  state.counters["l"] = static_cast<double>(state.range(0));
}
BENCHMARK(BM_Elementwise)->Arg(64)->Arg(45)->Arg(32)->Arg(19)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_InputTransform(benchmark::State& state) {
  const auto bc = small_case();
  const auto geom = make_tile_geometry({8, 16, 16}, 1, kF2x3);
  for (auto _ : state) benchmark::DoNotOptimize(winograd_input_transform(bc.problem.input, geom));
}
BENCHMARK(BM_InputTransform)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
