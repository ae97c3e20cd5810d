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

#include "wino3d/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <tuple>

#include "wino3d/layer.hpp"
#include "wino3d/pruning.hpp"
#include "wino3d/rng.hpp"

namespace wino3d {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kIm2col: return "im2col";
    case Strategy::kWinograd: return "winograd";
    case Strategy::kSparse: return "sparse";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "im2col") return Strategy::kIm2col;
  if (name == "winograd") return Strategy::kWinograd;
  if (name == "sparse") return Strategy::kSparse;
  throw ConfigError("unknown strategy '" + name + "'");
}

BenchCase make_bench_case(const std::string& layer, std::size_t ci,
                          std::size_t co, std::size_t d, std::size_t h,
                          std::size_t w, std::uint64_t seed) {
  const Rng root(seed);
  BenchCase bc;
  bc.layer = layer;
  bc.mask_seed = seed;
  bc.problem.input = Tensor<float>({ci, d, h, w});
  bc.problem.kernel = Tensor<float>({co, ci, 3, 3, 3});
  bc.problem.pad = 1;
  Rng a = root.split(1);
  Rng b = root.split(2);
  fill_normal(a, bc.problem.input.storage());
  fill_normal(b, bc.problem.kernel.storage(),
              std::sqrt(2.0 / static_cast<double>(ci * 27)));
  return bc;
}

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
std::uint64_t time_ns(F&& fn) {
  const auto t0 = Clock::now();
  fn();
  const auto t1 = Clock::now();
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

std::uint64_t median_of(std::vector<std::uint64_t> ns) {
  std::sort(ns.begin(), ns.end());
  const std::size_t n = ns.size();
  if (n % 2 == 1) return ns[n / 2];
  return (ns[n / 2 - 1] + ns[n / 2]) / 2;
}

template <class F>
std::uint64_t median_ns(F&& fn, std::size_t reps, std::size_t warmup) {
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<std::uint64_t> ns(reps);
  for (auto& t : ns) t = time_ns(fn);
  return median_of(std::move(ns));
}

void validate(const Tensor<float>& got, const Tensor<float>& want,
              const std::string& what) {
  const double err = max_rel_diff<float, float>(got.data(), want.data());
  if (!(err <= 1e-4)) {
    throw ValidationError(what + " output differs from its oracle (rel " +
                          std::to_string(err) + ")");
  }
}

// The masked layer behind the sparse strategy: columns chosen by seeded
// random scores, so every sparsity level keeps a nested subset.
WinogradLayer<float> masked_layer(const BenchCase& bc, std::size_t kept) {
  auto layer = WinogradLayer<float>::from_spatial(bc.problem.kernel, bc.problem.pad);
  Rng rng = Rng(bc.mask_seed).split(7);
  std::vector<double> scores(layer.tile_volume());
  for (auto& s : scores) s = rng.uniform();
  layer.set_mask(build_mask(scores, kept).mask);
  return layer;
}

}  // namespace

std::vector<BenchRow> bench_layer(Strategy strategy, const BenchCase& bc,
                                  std::size_t reps, int threads,
                                  std::size_t warmup) {
  if (reps < 11) throw ConfigError("bench needs at least 11 timed reps");
  if (warmup < 3) throw ConfigError("bench needs at least 3 warmup reps");
  if (threads < 1) throw ConfigError("thread count must be positive");
  const auto& p = bc.problem;
  p.output_dims();
  const std::size_t tv = kF2x3.tile_volume();

  BenchRow base;
  base.strategy = strategy_name(strategy);
  base.layer = bc.layer;
  base.Ci = p.in_channels();
  base.Co = p.out_channels();
  base.D = p.input.dim(1);
  base.H = p.input.dim(2);
  base.W = p.input.dim(3);
  base.reps = reps;
  base.threads = threads;

  if (strategy == Strategy::kIm2col) {
    OpCounter oc;
    im2col_conv3d(p, &oc);
    base.l = 0;
    base.total_mults = oc.total();
    base.ns_median = median_ns([&] { im2col_conv3d(p); }, reps, warmup);
    return {base};
  }

  if (strategy == Strategy::kWinograd) {
    const Tensor<float> reference = im2col_conv3d(p);
    const TileGeometry geom = make_tile_geometry(
        {base.D, base.H, base.W}, p.pad, kF2x3);
    std::vector<BenchRow> rows;
    const auto layer = WinogradLayer<float>::from_spatial(p.kernel, p.pad);
    OpCounter oc;
    auto res = forward_dense(layer, p.input, &oc, threads);
    validate(res.output, reference, "winograd");
    base.l = tv;
    base.ew_mults = oc.ew_mults;
    base.total_mults = oc.total();
    base.ns_median = median_ns(
        [&] { forward_dense(layer, p.input, nullptr, threads); }, reps, warmup);
    rows.push_back(base);

    const Matrix<float> v = winograd_input_transform(p.input, geom);
    ElementwiseBuffers<float> buf;
    BenchRow ew = base;
    ew.strategy = "winograd.ew";
    ew.total_mults = ew.ew_mults;
    ew.ns_median = median_ns(
        [&] { elementwise_stage(v, res.cache.weights, buf, threads); }, reps,
        warmup);
    rows.push_back(ew);
    return rows;
  }

  return bench_sparse_sweep(bc, {bc.sparsity}, reps, threads, warmup);
}

std::vector<BenchRow> bench_sparse_sweep(const BenchCase& bc,
                                         const std::vector<double>& sparsities,
                                         std::size_t reps, int threads,
                                         std::size_t warmup) {
  if (reps < 11) throw ConfigError("bench needs at least 11 timed reps");
  if (warmup < 3) throw ConfigError("bench needs at least 3 warmup reps");
  if (threads < 1) throw ConfigError("thread count must be positive");
  if (sparsities.empty()) throw ConfigError("bench sweep needs a sparsity level");
  const auto& p = bc.problem;
  p.output_dims();
  const std::size_t tv = kF2x3.tile_volume();

  BenchRow base;
  base.strategy = strategy_name(Strategy::kSparse);
  base.layer = bc.layer;
  base.Ci = p.in_channels();
  base.Co = p.out_channels();
  base.D = p.input.dim(1);
  base.H = p.input.dim(2);
  base.W = p.input.dim(3);
  base.reps = reps;
  base.threads = threads;
  const TileGeometry geom = make_tile_geometry({base.D, base.H, base.W}, p.pad, kF2x3);
  const Matrix<float> v = winograd_input_transform(p.input, geom);

  struct Level {
    CompactLayer<float> cl;
    ElementwiseBuffers<float> buf;
    BenchRow row;
    std::vector<std::uint64_t> full_ns, ew_ns;
  };
  std::vector<Level> levels;
  std::optional<Tensor<float>> reference;
  for (double sparsity : sparsities) {
    const std::size_t kept = kept_columns_for(sparsity, tv);
    const auto layer = masked_layer(bc, kept);
    Level lv{compact(layer), {}, base, {}, {}};
    OpCounter oc;
    const Tensor<float> out = forward_sparse(lv.cl, p.input, &oc, threads);
    if (kept == tv) {
      if (!reference) reference = im2col_conv3d(p);
      validate(out, *reference, "sparse");
    } else {
      validate(out, forward_lowrank(layer, p.input).output, "sparse");
    }
    if (oc.ew_mults != op_counts(base.Co, base.Ci, geom.tile_count(), kF2x3, kept).ew_mults) {
      throw ValidationError("sparse element-wise count disagrees with op_counts");
    }
    lv.row.sparsity = sparsity;
    lv.row.l = kept;
    lv.row.ew_mults = oc.ew_mults;
    lv.row.total_mults = oc.total();
    levels.push_back(std::move(lv));
  }

  // Reps are interleaved across levels so slow periods of a shared host
  // land on every level alike.
  auto run_full = [&](Level& lv) { forward_sparse(lv.cl, p.input, nullptr, threads); };
  auto run_ew = [&](Level& lv) { elementwise_stage(v, lv.cl.packed(), lv.buf, threads); };
  for (std::size_t i = 0; i < warmup; ++i) {
    for (auto& lv : levels) {
      run_full(lv);
      run_ew(lv);
    }
  }
  for (std::size_t i = 0; i < reps; ++i) {
    for (auto& lv : levels) {
      lv.full_ns.push_back(time_ns([&] { run_full(lv); }));
      lv.ew_ns.push_back(time_ns([&] { run_ew(lv); }));
    }
  }
  std::vector<BenchRow> rows;
  for (auto& lv : levels) {
    lv.row.ns_median = median_of(lv.full_ns);
    rows.push_back(lv.row);
    BenchRow ew = lv.row;
    ew.strategy = "sparse.ew";
    ew.total_mults = ew.ew_mults;
    ew.ns_median = median_of(lv.ew_ns);
    rows.push_back(ew);
  }
  return rows;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class N>
N parse_number(const std::string& field) {
  N v{};
  const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
  if (r.ec != std::errc() || r.ptr != field.data() + field.size()) {
    throw FormatError("bad numeric field '" + field + "' in bench CSV");
  }
  return v;
}

}  // namespace

std::string bench_report(std::vector<BenchRow> rows) {
  if (rows.empty()) throw ConfigError("bench_report: no rows");
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.layer, a.strategy, a.sparsity) <
           std::tie(b.layer, b.strategy, b.sparsity);
  });
  std::string out = std::string(kBenchHeader) + "\n";
  for (const auto& r : rows) {
    for (const std::string* f : {&r.strategy, &r.layer}) {
      if (f->find_first_of(",\n") != std::string::npos) {
        throw ConfigError("bench field '" + *f + "' contains a separator");
      }
    }
    out += r.strategy + "," + r.layer + "," + std::to_string(r.Ci) + "," +
           std::to_string(r.Co) + "," + std::to_string(r.D) + "," +
           std::to_string(r.H) + "," + std::to_string(r.W) + "," +
           format_double(r.sparsity) + "," + std::to_string(r.l) + "," +
           std::to_string(r.ew_mults) + "," + std::to_string(r.total_mults) +
           "," + std::to_string(r.ns_median) + "," + std::to_string(r.reps) +
           "," + std::to_string(r.threads) + "\n";
  }
  return out;
}

std::vector<BenchRow> parse_bench_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kBenchHeader) {
    throw FormatError("bench CSV header mismatch");
  }
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 14) throw FormatError("bench CSV row has wrong field count");
    BenchRow r;
    r.strategy = f[0];
    r.layer = f[1];
    r.Ci = parse_number<std::size_t>(f[2]);
    r.Co = parse_number<std::size_t>(f[3]);
    r.D = parse_number<std::size_t>(f[4]);
    r.H = parse_number<std::size_t>(f[5]);
    r.W = parse_number<std::size_t>(f[6]);
    r.sparsity = parse_number<double>(f[7]);
    r.l = parse_number<std::size_t>(f[8]);
    r.ew_mults = parse_number<std::uint64_t>(f[9]);
    r.total_mults = parse_number<std::uint64_t>(f[10]);
    r.ns_median = parse_number<std::uint64_t>(f[11]);
    r.reps = parse_number<std::size_t>(f[12]);
    r.threads = parse_number<int>(f[13]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace wino3d
