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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "wino3d/bench.hpp"
#include "wino3d/layer.hpp"
#include "wino3d/lowrank.hpp"
#include "wino3d/model_io.hpp"
#include "wino3d/pruning.hpp"
#include "wino3d/trainer.hpp"

using namespace wino3d;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. forward_dense vs direct_conv3d over 200 seeded problems.
Outcome winograd_correctness() {
  const auto t0 = Clock::now();
  double worst64 = 0.0, worst32 = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 eng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(eng);
    };
    const std::size_t ci = pick(1, 8), co = pick(1, 8), pad = pick(0, 1);
    const std::size_t d = pick(4, 12), h = pick(4, 12), w = pick(4, 12);
    const auto in = oracle::random_tensor(seed * 2 + 1, {ci, d, h, w});
    const auto k = oracle::random_tensor(seed * 2 + 2, {co, ci, 3, 3, 3});

    const auto want = direct_conv3d(ConvProblem<double>{in, k, pad});
    const auto got = forward_dense(WinogradLayer<double>::from_spatial(k, pad), in).output;
    worst64 = std::max(worst64, max_rel_diff(got.data(), want.data()));

    const auto inf = in.cast<float>();
    const auto kf = k.cast<float>();
    const auto want32 = direct_conv3d(ConvProblem<float>{inf, kf, pad});
    const auto got32 = forward_dense(WinogradLayer<float>::from_spatial(kf, pad), inf).output;
    worst32 = std::max(worst32, max_rel_diff(got32.data(), want32.data()));
  }
  const double secs = seconds_since(t0);
  return {worst64 <= 1e-12 && worst32 <= 1e-5 && secs < 120.0,
          "200 problems, max rel err f64 " + fmt("%.3g", worst64) + " (<= 1e-12), f32 " +
              fmt("%.3g", worst32) + " (<= 1e-5), " + fmt("%.1f", secs) + " s (< 120 s)"};
}

// 2. Flattened matrices vs nested transforms, each matrix separately.
Outcome flat_nested_equivalence() {
  const auto bm = base_matrices(kF2x3);
  const auto& ts = transform_set(kF2x3);
  auto flat = [](const Tensor<double>& x, const Matrix<double>& M) {
    return oracle::matmul(Matrix<double>(1, x.size(), x.storage()), M).storage();
  };
  auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  };
  double ek = 0.0, ei = 0.0, eo = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = oracle::random_tensor(seed * 3 + 1, {3, 3, 3});
    const auto d = oracle::random_tensor(seed * 3 + 2, {4, 4, 4});
    const auto x = oracle::random_tensor(seed * 3 + 3, {4, 4, 4});
    ek = std::max(ek, diff(flat(g, ts.T_K), nested_kernel_transform(g, bm).storage()));
    ei = std::max(ei, diff(flat(d, ts.T_I), nested_input_transform(d, bm).storage()));
    eo = std::max(eo, diff(flat(x, ts.T_O), nested_output_transform(x, bm).storage()));
  }
  return {ek <= 1e-12 && ei <= 1e-12 && eo <= 1e-12,
          "100 tiles, max abs diff T_K " + fmt("%.3g", ek) + ", T_I " + fmt("%.3g", ei) +
              ", T_O " + fmt("%.3g", eo) + " (<= 1e-12)"};
}

// 3. Inherited Winograd weights have rank at most 27.
Outcome rank_bound() {
  double worst_tail = 0.0, worst_cum = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t rows = 128 + 32 * (seed % 8);
    const auto g = oracle::random_matrix(seed + 500, rows, 27);
    const auto gw = spatial_to_winograd(g, transform_set(kF2x3));
    const auto rep = spectrum_report(gw);
    for (std::size_t i = 27; i < rep.sigma.size(); ++i)
      worst_tail = std::max(worst_tail, rep.sigma[i] / rep.sigma[0]);
    worst_cum = std::min(worst_cum, rep.cumulative[26]);
  }
  return {worst_tail <= 1e-10 && worst_cum >= 1.0 - 1e-9,
          "20 weights, max sigma_i/sigma_0 (i >= 27) " + fmt("%.3g", worst_tail) +
              " (<= 1e-10), min top-27 cumulative " + fmt("%.15f", worst_cum) +
              " (>= 1 - 1e-9)"};
}

// 4. Analytic gradients vs central differences.
Outcome gradient_soundness() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 eng(seed + 77);
    const std::size_t ci = 1 + eng() % 2, co = 1 + eng() % 2, s = 1 + eng() % 3;
    const std::size_t pad = eng() % 2;
    auto layer = WinogradLayer<double>::from_spatial(
        oracle::random_tensor(seed + 1000, {co, ci, 3, 3, 3}), pad);
    layer.set_lowrank(oracle::random_matrix(seed + 2000, co * ci, s, 0.5),
                      oracle::random_matrix(seed + 3000, s, 64, 0.5));
    if (seed % 2 == 1) {
      std::vector<std::uint8_t> mask(64, 1);
      for (std::size_t j = 0; j < 64; j += 1 + seed % 4) mask[j] = 0;
      layer.set_mask(mask);
    }
    const auto in = oracle::random_tensor(seed + 4000, {ci, 3 + eng() % 3, 3 + eng() % 3, 3 + eng() % 3});
    const auto res = forward_lowrank(layer, in);
    const auto w = oracle::random_tensor(seed + 5000, res.output.dims());
    const auto grads = backward(layer, res.cache, w);
    auto loss = [&](const WinogradLayer<double>& l, const Tensor<double>& x) {
      const auto o = forward_lowrank(l, x).output;
      double acc = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) acc += o[i] * w[i];
      return acc;
    };
    const auto fr = oracle::central_difference(
        [&](const std::vector<double>& v) {
          auto l = layer;
          l.mutable_row_factor().storage() = v;
          return loss(l, in);
        },
        layer.row_factor().storage(), 1e-5);
    const auto fc = oracle::central_difference(
        [&](const std::vector<double>& v) {
          auto l = layer;
          l.mutable_col_factor().storage() = v;
          return loss(l, in);
        },
        layer.col_factor().storage(), 1e-5);
    const auto fi = oracle::central_difference(
        [&](const std::vector<double>& v) { return loss(layer, Tensor<double>(in.dims(), v)); },
        in.storage(), 1e-5);
    worst = std::max({worst, oracle::rel_err(grads.d_row_factor.storage(), fr),
                      oracle::rel_err(grads.d_col_factor.storage(), fc),
                      oracle::rel_err(grads.d_input.storage(), fi)});
  }
  return {worst <= 1e-6,
          "20 layers, max rel err over dG_r, dG_c, dI " + fmt("%.3g", worst) + " (<= 1e-6)"};
}

// 5. Low-rank trainable-parameter formula.
Outcome parameter_formula() {
  bool ok = true;
  for (std::size_t co : {1, 8, 16, 64})
    for (std::size_t ci : {1, 3, 64})
      for (std::size_t s : {1, 8, 27, 64}) {
        WinogradLayer<float> layer(co, ci, 1, Matrix<float>(co * ci, 64));
        layer.set_lowrank(Matrix<float>(co * ci, s), Matrix<float>(s, 64));
        ok = ok && layer.trainable_parameters() == co * ci * s + s * 64;
      }
  WinogradLayer<float> big(64, 64, 1, Matrix<float>(4096, 64));
  const std::size_t dense = big.trainable_parameters();
  big.set_lowrank(Matrix<float>(4096, 8), Matrix<float>(8, 64));
  const std::size_t lr = big.trainable_parameters();
  ok = ok && lr == 33280 && dense == 262144;
  return {ok, "C_oC_i*s + s*t^3 on 48 shapes; 64x64, s=8: " + std::to_string(lr) + " vs " +
                  std::to_string(dense) + " (" +
                  fmt("%.2f", static_cast<double>(dense) / static_cast<double>(lr)) +
                  "x reduction)"};
}

// 6. Sparse path equals masked dense path; counter is exact.
Outcome sparse_equivalence() {
  double worst = 0.0;
  bool counts_ok = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 eng(seed + 9000);
    const std::size_t ci = 1 + eng() % 6, co = 1 + eng() % 6, s = 1 + eng() % 8;
    const std::size_t pad = eng() % 2;
    auto layer = WinogradLayer<double>::from_spatial(
        oracle::random_tensor(seed + 100, {co, ci, 3, 3, 3}), pad);
    layer.set_lowrank(oracle::random_matrix(seed + 200, co * ci, s, 0.3),
                      oracle::random_matrix(seed + 300, s, 64, 0.3));
    const std::size_t kept = 1 + eng() % 64;
    layer.set_mask(build_mask(oracle::gaussian(seed + 400, 64), kept).mask);
    const auto in = oracle::random_tensor(
        seed + 500, {ci, 3 + eng() % 8, 3 + eng() % 8, 3 + eng() % 8});
    OpCounter counter;
    const auto cl = compact(layer);
    const auto a = forward_sparse(cl, in, &counter);
    const auto b = forward_lowrank(layer, in).output;
    worst = std::max(worst, max_rel_diff(a.data(), b.data()));
    const auto g = make_tile_geometry({in.dim(1), in.dim(2), in.dim(3)}, pad, kF2x3);
    counts_ok = counts_ok && counter.ew_mults == g.tile_count() * ci * co * kept &&
                counter.ew_mults == op_counts(co, ci, g.tile_count(), kF2x3, kept).ew_mults;
  }
  return {worst <= 1e-12 && counts_ok,
          "100 (layer, mask) pairs, max rel diff " + fmt("%.3g", worst) +
              " (<= 1e-12), ew_mults == T*C_i*C_o*l: " + (counts_ok ? "all" : "NOT all")};
}

// 7. Element-wise stage latency falls with sparsity.
Outcome speedup_property() {
  const auto t0 = Clock::now();
  const std::size_t reps = 21;
  auto bc = make_bench_case("c3d", 64, 64, 8, 28, 28, 7);
  const auto dense = bench_layer(Strategy::kWinograd, bc, reps, 1);
  std::uint64_t dense_ew = 0;
  for (const auto& r : dense)
    if (r.strategy == "winograd.ew") dense_ew = r.ns_median;
  std::vector<std::uint64_t> times;
  std::ostringstream ms;
  for (const auto& r : bench_sparse_sweep(bc, {0.0, 0.3, 0.5, 0.7, 0.9}, reps, 1)) {
    if (r.strategy == "sparse.ew") {
      times.push_back(r.ns_median);
      ms << (times.size() > 1 ? ", " : "") << fmt("%.2f", static_cast<double>(r.ns_median) / 1e6);
    }
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < times.size(); ++i) decreasing = decreasing && times[i] < times[i - 1];
  // Sparsity 0 keeps all 64 positions, which is exactly the dense stage,
  // timed in the same interleaved sweep as the other levels.
  const double speedup = static_cast<double>(times[0]) / static_cast<double>(times[2]);
  const double secs = seconds_since(t0);
  return {decreasing && speedup >= 1.5 && secs < 300.0,
          "ew median ms at sparsity 0/.3/.5/.7/.9: " + ms.str() + " (strictly decreasing: " +
              (decreasing ? "yes" : "no") + "), separate dense run " +
              fmt("%.2f", static_cast<double>(dense_ew) / 1e6) + " ms, speedup at 0.5 vs 0 " +
              fmt("%.2f", speedup) + "x (>= 1.5), " + fmt("%.0f", secs) + " s (< 300 s)"};
}

// 8. Seeded TinyC3D pipeline regression.
Outcome pipeline_regression() {
  const auto t0 = Clock::now();
  const std::uint64_t seed = 2026;
  const auto data = make_splits<float>(seed, 4, 256, 64, {1, 8, 16, 16});

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.lr = 1e-3;
  cfg.lr_decay_every = 15;
  cfg.momentum = 0.9;
  cfg.seed = seed;
  cfg.threads = 1;

  auto fs = make_tiny_c3d<float>(seed);
  cfg.mode = Mode::kFS;
  cfg.epochs = 3;
  train(fs, data.train, cfg);
  const double acc_fs = evaluate(fs, data.eval, 1);

  const std::size_t finetune = 10;
  auto fw = convert_to_winograd(fs);
  cfg.mode = Mode::kFW;
  cfg.epochs = finetune;
  train(fw, data.train, cfg);
  const double acc_fw = evaluate(fw, data.eval, 1);

  auto lr = convert_to_winograd(fs);
  enable_lowrank(lr, {8, 8}, 0.1);
  cfg.mode = Mode::kLR;
  train(lr, data.train, cfg);
  const double acc_lr = evaluate(lr, data.eval, 1);
  const double param_ratio =
      static_cast<double>(winograd_trainable_parameters(lr, Mode::kLR)) /
      static_cast<double>(winograd_trainable_parameters(fw, Mode::kFW));

  auto pr = convert_to_winograd(fs);
  PruneConfig pc;
  pc.sparsity = 0.5;
  pc.score_epochs = 2;
  pc.retrain_epochs = finetune - pc.score_epochs;
  pc.rank_plan = {8, 8};
  pc.alpha = 0.1;
  pc.train = cfg;
  prune_pipeline(pr, data.train, pc);
  const double acc_pr = evaluate(pr, data.eval, 1);

  const double secs = seconds_since(t0);
  const bool a = acc_lr >= acc_fw - 0.01 && param_ratio <= 0.25;
  const bool b = acc_pr >= acc_lr - 0.02;
  return {a && b && secs < 900.0,
          "eval acc FS " + fmt("%.4f", acc_fs) + ", FW " + fmt("%.4f", acc_fw) + ", LR " +
              fmt("%.4f", acc_lr) + " (>= FW - 0.01), LR/FW Winograd params " +
              fmt("%.4f", param_ratio) + " (<= 0.25), pruned@0.5 " + fmt("%.4f", acc_pr) +
              " (>= LR - 0.02), " + fmt("%.0f", secs) + " s (< 900 s)"};
}

// 9. Truncated-update error is monotone and vanishes at full rank.
Outcome truncated_update() {
  bool monotone = true;
  double worst_full = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto w = oracle::random_matrix(seed + 1, 64 + 32 * seed, 64);
    const auto u = oracle::random_matrix(seed + 11, 64 + 32 * seed, 64, 0.1);
    Matrix<double> sum = w;
    for (std::size_t i = 0; i < sum.size(); ++i) sum.storage()[i] += u.storage()[i];
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s <= 64; ++s) {
      const auto r = truncated_update_eval(w, u, s);
      double e = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = r.storage()[i] - sum.storage()[i];
        e += d * d;
      }
      e = std::sqrt(e);
      monotone = monotone && e <= prev;
      prev = e;
      if (s == 64) worst_full = std::max(worst_full, e / frobenius_norm(sum));
    }
  }
  return {monotone && worst_full <= 1e-10,
          std::string("5 updates, error non-increasing in s: ") + (monotone ? "yes" : "no") +
              ", rel Frobenius error at s = 64 " + fmt("%.3g", worst_full) + " (<= 1e-10)"};
}

// 10. Bit-identical round trips and closed-form compact payloads.
Outcome format_stability() {
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t = oracle::random_tensor(seed, {2 + seed, 3, 4});
    ok = ok && std::get<Tensor<double>>(decode_tensor(encode_tensor(t))) == t;
    const auto f = t.cast<float>();
    ok = ok && std::get<Tensor<float>>(decode_tensor(encode_tensor(f))) == f;
  }
  auto model = convert_to_winograd(make_tiny_c3d<float>(3));
  enable_lowrank(model, {8, 4}, 0.1);
  std::get<WinogradLayer<float>>(model.layers[1]).set_mask(
      build_mask(oracle::gaussian(4, 64), 30).mask);
  for (const Model<float>* m : {&model}) {
    const auto bytes = encode_model(*m);
    ok = ok && encode_model(decode_model<float>(bytes)) == bytes;
    const auto fin = finalize_model(*m);
    const auto fb = encode_model(fin);
    ok = ok && encode_model(decode_model<float>(fb)) == fb;
  }
  bool sizes = true;
  std::mt19937_64 eng(10);
  for (int i = 0; i < 10; ++i) {
    const std::size_t l = 1 + eng() % 64, co = 1 + eng() % 32, ci = 1 + eng() % 32;
    auto locs = build_mask(oracle::gaussian(static_cast<std::uint64_t>(i), 64), l).locations;
    Model<float> m;
    m.layers.emplace_back(CompactLayer<float>(
        co, ci, 1, oracle::random_matrix(static_cast<std::uint64_t>(i), co * ci, l).cast<float>(),
        locs));
    const auto bytes = encode_model(m);
    const std::size_t want = 8 + 12 + 2 + 2 * l + 4 * co * ci * l;
    sizes = sizes && bytes.size() == want &&
            encode_model(decode_model<float>(bytes)) == bytes;
  }
  return {ok && sizes, std::string("tensor/model round trips bit-identical: ") +
                           (ok ? "yes" : "no") + ", 10 compact payloads match 2l + 4*C_oC_i*l: " +
                           (sizes ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"winograd correctness", winograd_correctness},
      {"flattened vs nested transforms", flat_nested_equivalence},
      {"rank bound of inherited weights", rank_bound},
      {"gradient soundness", gradient_soundness},
      {"parameter-reduction formula", parameter_formula},
      {"sparse-path equivalence and counts", sparse_equivalence},
      {"element-wise speedup with sparsity", speedup_property},
      {"pipeline regression", pipeline_regression},
      {"truncated-update evaluation", truncated_update},
      {"format stability", format_stability},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
