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

// Strategy benchmark: im2col GEMM, dense Winograd and column-sparse
// Winograd on one f32 convolution problem.

#ifndef WINO3D_BENCH_HPP_
#define WINO3D_BENCH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "wino3d/refconv.hpp"

namespace wino3d {

enum class Strategy : std::uint8_t { kIm2col, kWinograd, kSparse };

std::string strategy_name(Strategy s);
/// Accepts im2col, winograd, sparse.
Strategy parse_strategy(const std::string& name);

/// One CSV line. Full-forward rows carry the plain strategy name; rows timing
/// only the element-wise stage append ".ew" (winograd.ew, sparse.ew).
struct BenchRow {
  std::string strategy;
  std::string layer;
  std::size_t Ci = 0, Co = 0, D = 0, H = 0, W = 0;
  double sparsity = 0.0;
  std::size_t l = 0;
  std::uint64_t ew_mults = 0;
  std::uint64_t total_mults = 0;
  std::uint64_t ns_median = 0;
  std::size_t reps = 0;
  int threads = 1;

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct BenchCase {
  std::string layer = "layer0";
  ConvProblem<float> problem;  // 3x3x3 kernel
  double sparsity = 0.0;       // sparse strategy only
  std::uint64_t mask_seed = 0;  // picks the kept columns
};

/// Random input and kernel of the given shape (N(0,1) input, He-scaled
/// kernel), pad 1.
BenchCase make_bench_case(const std::string& layer, std::size_t ci,
                          std::size_t co, std::size_t d, std::size_t h,
                          std::size_t w, std::uint64_t seed);

/// Validates the strategy's output first (Winograd against im2col, sparse
/// against the masked dense Winograd output, 1e-4 relative) and throws
/// ValidationError on mismatch. Then times `reps` runs after `warmup`
/// discarded ones. Winograd strategies also yield an element-wise-stage row.
std::vector<BenchRow> bench_layer(Strategy strategy, const BenchCase& bc,
                                  std::size_t reps, int threads,
                                  std::size_t warmup = 3);

/// The sparse strategy at several sparsity levels. Every level is validated
/// as in bench_layer; timed reps then cycle through the levels in turn.
/// Yields a sparse and a sparse.ew row per level, in input order.
std::vector<BenchRow> bench_sparse_sweep(const BenchCase& bc,
                                         const std::vector<double>& sparsities,
                                         std::size_t reps, int threads,
                                         std::size_t warmup = 3);

/// Header plus one line per row, ordered by (layer, strategy, sparsity).
/// Throws ConfigError on an empty row set.
std::string bench_report(std::vector<BenchRow> rows);

/// Inverse of bench_report. Throws FormatError on malformed text.
std::vector<BenchRow> parse_bench_csv(const std::string& text);

inline constexpr const char* kBenchHeader =
    "strategy,layer,Ci,Co,D,H,W,sparsity,l,ew_mults,total_mults,ns_median,"
    "reps,threads";

}  // namespace wino3d

#endif  // WINO3D_BENCH_HPP_
