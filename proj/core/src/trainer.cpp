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

#include "wino3d/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

#include "wino3d/lowrank.hpp"
#include "wino3d/parallel.hpp"
#include "wino3d/rng.hpp"

namespace wino3d {

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overload(Fs...) -> Overload<Fs...>;

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::kFS: return "fs";
    case Mode::kFW: return "fw";
    case Mode::kLR: return "lr";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "fs") return Mode::kFS;
  if (name == "fw") return Mode::kFW;
  if (name == "lr") return Mode::kLR;
  throw ConfigError("unknown mode '" + name + "' (expected fs, fw or lr)");
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

template <RealScalar T>
Dims SynthDataset<T>::sample_dims() const {
  return Dims(samples.dims().begin() + 1, samples.dims().end());
}

template <RealScalar T>
Tensor<T> SynthDataset<T>::sample(std::size_t i) const {
  const Dims d = sample_dims();
  const std::size_t len = dims_product(d);
  const auto first = samples.storage().begin() + static_cast<std::ptrdiff_t>(i * len);
  return Tensor<T>(d, std::vector<T>(first, first + static_cast<std::ptrdiff_t>(len)));
}

template <RealScalar T>
SynthDataset<T> synth_dataset(std::uint64_t seed, std::size_t classes,
                              std::size_t n, const Dims& dims, double noise) {
  if (classes == 0 || n == 0) {
    throw ConfigError("dataset needs at least one class and one sample");
  }
  if (dims.size() != 4) {
    throw ConfigError("sample dims must be C, D, H, W");
  }
  const std::size_t C = dims[0], D = dims[1], H = dims[2], W = dims[3];
  if (C == 0 || D < 2 || H < 8 || W < 8) {
    throw ConfigError("sample dims " + dims_to_string(dims) +
                      " too small for a moving blob (need D >= 2, H, W >= 8)");
  }
  SynthDataset<T> ds;
  ds.classes = classes;
  ds.seed = seed;
  ds.labels.resize(n);
  Dims all{n};
  all.insert(all.end(), dims.begin(), dims.end());
  ds.samples = Tensor<T>(all);
  const std::size_t len = dims_product(dims);
  const Rng root(seed);
  const double reach = 0.5 * static_cast<double>(std::min(H, W));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = root.split(i + 1);
    const int label = static_cast<int>(i % classes);
    ds.labels[i] = label;
    const double angle = 2.0 * std::numbers::pi * label /
                             static_cast<double>(classes) +
                         0.3 * (rng.uniform() - 0.5);
    const double speed =
        (0.6 + 0.4 * rng.uniform()) * reach / static_cast<double>(D - 1);
    const double vy = speed * std::sin(angle);
    const double vx = speed * std::cos(angle);
    const double half = 0.5 * static_cast<double>(D - 1);
    const double h0 = 0.5 * static_cast<double>(H - 1) - vy * half +
                      3.0 * (rng.uniform() - 0.5);
    const double w0 = 0.5 * static_cast<double>(W - 1) - vx * half +
                      3.0 * (rng.uniform() - 0.5);
    const double sigma = 1.5 + 0.5 * rng.uniform();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    T* out = ds.samples.storage().data() + i * len;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t d = 0; d < D; ++d) {
        const double ch = h0 + vy * static_cast<double>(d);
        const double cw = w0 + vx * static_cast<double>(d);
        for (std::size_t h = 0; h < H; ++h) {
          for (std::size_t w = 0; w < W; ++w) {
            const double dy = static_cast<double>(h) - ch;
            const double dx = static_cast<double>(w) - cw;
            const double v = std::exp(-(dy * dy + dx * dx) * inv) +
                             noise * rng.normal();
            out[((c * D + d) * H + h) * W + w] = static_cast<T>(v);
          }
        }
      }
    }
  }
  return ds;
}

template <RealScalar T>
DataSplits<T> make_splits(std::uint64_t seed, std::size_t classes,
                          std::size_t n_train, std::size_t n_eval,
                          const Dims& dims, double noise) {
  return {synth_dataset<T>(seed, classes, n_train, dims, noise),
          synth_dataset<T>(Rng(seed).split(0xe7a1).next_u64(), classes, n_eval,
                           dims, noise)};
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

template <RealScalar T>
std::vector<std::size_t> Model<T>::winograd_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (std::holds_alternative<WinogradLayer<T>>(layers[i])) out.push_back(i);
  }
  return out;
}

template <RealScalar T>
std::size_t Model<T>::classes() const {
  if (layers.empty() || !std::holds_alternative<Linear<T>>(layers.back())) {
    throw ConfigError("model must end in a linear classifier");
  }
  return std::get<Linear<T>>(layers.back()).weight.rows();
}

namespace {

template <RealScalar T>
SpatialConv<T> he_conv(Rng rng, std::size_t co, std::size_t ci) {
  SpatialConv<T> conv{Tensor<T>({co, ci, 3, 3, 3}), 1};
  fill_normal(rng, conv.kernel.storage(),
              std::sqrt(2.0 / static_cast<double>(ci * 27)));
  return conv;
}

}  // namespace

template <RealScalar T>
Model<T> make_tiny_c3d(std::uint64_t seed, const TinyC3DConfig& cfg) {
  const auto& in = cfg.input_dims;
  if (in.size() != 3 || in[0] < 4 || in[1] < 4 || in[2] < 4) {
    throw ConfigError("TinyC3D input dims must be D, H, W >= 4");
  }
  if (cfg.in_channels == 0 || cfg.classes == 0 || cfg.widths[0] == 0 ||
      cfg.widths[1] == 0 || cfg.widths[2] == 0) {
    throw ConfigError("TinyC3D channel counts must be positive");
  }
  const Rng root(seed);
  Model<T> model;
  model.mode = Mode::kFS;
  model.layers.emplace_back(he_conv<T>(root.split(1), cfg.widths[0], cfg.in_channels));
  model.layers.emplace_back(he_conv<T>(root.split(2), cfg.widths[1], cfg.widths[0]));
  model.layers.emplace_back(AvgPool{2});
  model.layers.emplace_back(he_conv<T>(root.split(3), cfg.widths[2], cfg.widths[1]));
  model.layers.emplace_back(AvgPool{2});
  const std::size_t features =
      cfg.widths[2] * (in[0] / 4) * (in[1] / 4) * (in[2] / 4);
  Linear<T> head{Matrix<T>(cfg.classes, features),
                 std::vector<T>(cfg.classes, T{0})};
  Rng hr = root.split(4);
  fill_normal(hr, head.weight.storage(),
              std::sqrt(1.0 / static_cast<double>(features)));
  model.layers.emplace_back(std::move(head));
  return model;
}

template <RealScalar T>
Model<T> convert_to_winograd(const Model<T>& model) {
  Model<T> out;
  out.mode = Mode::kFW;
  bool first_conv = true;
  for (const auto& layer : model.layers) {
    if (const auto* conv = std::get_if<SpatialConv<T>>(&layer)) {
      const bool eligible = !first_conv && conv->kernel.dim(2) == 3 &&
                            conv->kernel.dim(3) == 3 && conv->kernel.dim(4) == 3;
      first_conv = false;
      if (eligible) {
        out.layers.emplace_back(
            WinogradLayer<T>::from_spatial(conv->kernel, conv->pad));
        continue;
      }
    } else if (!std::holds_alternative<AvgPool>(layer) &&
               !std::holds_alternative<Linear<T>>(layer)) {
      first_conv = false;
    }
    out.layers.push_back(layer);
  }
  return out;
}

template <RealScalar T>
void enable_lowrank(Model<T>& model, const std::vector<std::size_t>& rank_plan,
                    double alpha) {
  const auto idx = model.winograd_indices();
  if (idx.empty()) throw ConfigError("model has no Winograd layers");
  if (rank_plan.size() != 1 && rank_plan.size() != idx.size()) {
    throw ConfigError("rank plan has " + std::to_string(rank_plan.size()) +
                      " entries for " + std::to_string(idx.size()) +
                      " Winograd layers");
  }
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto& layer = std::get<WinogradLayer<T>>(model.layers[idx[k]]);
    const std::size_t s = rank_plan.size() == 1 ? rank_plan[0] : rank_plan[k];
    auto [gr, gc] = init_lowrank(layer.winograd_weight(), s, alpha);
    layer.set_lowrank(std::move(gr), std::move(gc));
  }
  model.mode = Mode::kLR;
}

namespace {

template <RealScalar T>
std::size_t layer_trainable(const ModelLayer<T>& layer, Mode mode,
                            bool winograd_only) {
  return std::visit(
      Overload{
          [&](const SpatialConv<T>& c) -> std::size_t {
            return (mode == Mode::kFS && !winograd_only) ? c.kernel.size() : 0;
          },
          [&](const WinogradLayer<T>& w) -> std::size_t {
            if (mode == Mode::kFW) {
              return w.out_channels() * w.in_channels() * w.tile_volume();
            }
            if (mode == Mode::kLR) return w.has_lowrank() ? w.trainable_parameters() : 0;
            return 0;
          },
          [](const CompactLayer<T>&) -> std::size_t { return 0; },
          [](const AvgPool&) -> std::size_t { return 0; },
          [&](const Linear<T>& l) -> std::size_t {
            return winograd_only ? 0 : l.weight.size() + l.bias.size();
          }},
      layer);
}

}  // namespace

template <RealScalar T>
std::size_t trainable_parameters(const Model<T>& model, Mode mode) {
  std::size_t total = 0;
  for (const auto& l : model.layers) total += layer_trainable(l, mode, false);
  return total;
}

template <RealScalar T>
std::size_t winograd_trainable_parameters(const Model<T>& model, Mode mode) {
  std::size_t total = 0;
  for (const auto& l : model.layers) total += layer_trainable(l, mode, true);
  return total;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <RealScalar T>
CrossEntropy<T> cross_entropy(const std::vector<T>& logits, int label) {
  if (logits.empty() || label < 0 ||
      static_cast<std::size_t>(label) >= logits.size()) {
    throw ShapeError("cross_entropy: label outside logits");
  }
  double mx = static_cast<double>(logits[0]);
  for (T v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  std::vector<double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += e[i];
  }
  CrossEntropy<T> ce;
  const double lse = mx + std::log(sum);
  ce.loss = lse - static_cast<double>(logits[static_cast<std::size_t>(label)]);
  ce.d_logits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = e[i] / sum;
    ce.d_logits[i] =
        static_cast<T>(p - (static_cast<int>(i) == label ? 1.0 : 0.0));
  }
  return ce;
}

namespace {

template <RealScalar T>
struct LayerTrace {
  Tensor<T> input;
  Tensor<T> output;  // after the ReLU for conv-like layers
  std::optional<ForwardCache<T>> cache;
};

template <RealScalar T>
bool uses_masked_path(const WinogradLayer<T>& w) {
  return w.has_lowrank() || !w.mask_full();
}

template <RealScalar T>
void relu_inplace(Tensor<T>& t) {
  for (T& v : t.storage()) v = v < T{0} ? T{0} : v;  // NaN propagates
}

template <RealScalar T>
Tensor<T> avg_pool(const Tensor<T>& in, std::size_t p) {
  const std::size_t C = in.dim(0), D = in.dim(1) / p, H = in.dim(2) / p,
                    W = in.dim(3) / p;
  if (D == 0 || H == 0 || W == 0) throw ShapeError("pool window exceeds input");
  Tensor<T> out({C, D, H, W});
  const T scale = T{1} / static_cast<T>(p * p * p);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
          T acc = T{0};
          for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
              for (std::size_t e = 0; e < p; ++e)
                acc += in.at(c, d * p + a, h * p + b, w * p + e);
          out.at(c, d, h, w) = acc * scale;
        }
  return out;
}

template <RealScalar T>
Tensor<T> avg_pool_backward(const Tensor<T>& d_out, const Dims& in_dims,
                            std::size_t p) {
  Tensor<T> d_in(in_dims);
  const T scale = T{1} / static_cast<T>(p * p * p);
  for (std::size_t c = 0; c < d_out.dim(0); ++c)
    for (std::size_t d = 0; d < d_out.dim(1); ++d)
      for (std::size_t h = 0; h < d_out.dim(2); ++h)
        for (std::size_t w = 0; w < d_out.dim(3); ++w) {
          const T g = d_out.at(c, d, h, w) * scale;
          for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
              for (std::size_t e = 0; e < p; ++e)
                d_in.at(c, d * p + a, h * p + b, w * p + e) = g;
        }
  return d_in;
}

template <RealScalar T>
std::vector<T> linear_forward(const Linear<T>& l, const Tensor<T>& x) {
  if (x.size() != l.weight.cols()) {
    throw ShapeError("classifier expects " + std::to_string(l.weight.cols()) +
                     " features, got " + std::to_string(x.size()));
  }
  std::vector<T> out(l.weight.rows());
  for (std::size_t o = 0; o < out.size(); ++o) {
    const T* w = l.weight.row(o).data();
    T acc = T{0};
    for (std::size_t f = 0; f < x.size(); ++f) acc += w[f] * x[f];
    out[o] = acc + l.bias[o];
  }
  return out;
}

// Runs the model; with `trace` set, records what backward needs.
template <RealScalar T>
std::vector<T> run_model(const Model<T>& model, const Tensor<T>& sample,
                         std::vector<LayerTrace<T>>* trace) {
  if (trace) trace->assign(model.layers.size(), {});
  Tensor<T> cur = sample;
  std::vector<T> logits;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    LayerTrace<T>* tr = trace ? &(*trace)[i] : nullptr;
    if (tr) tr->input = cur;
    std::visit(
        Overload{
            [&](const SpatialConv<T>& c) {
              cur = im2col_conv3d(ConvProblem<T>{std::move(cur), c.kernel, c.pad});
              relu_inplace(cur);
            },
            [&](const WinogradLayer<T>& w) {
              auto res = uses_masked_path(w) ? forward_lowrank(w, cur)
                                             : forward_dense(w, cur);
              cur = std::move(res.output);
              relu_inplace(cur);
              if (tr) tr->cache = std::move(res.cache);
            },
            [&](const CompactLayer<T>& cl) {
              cur = forward_sparse(cl, cur);
              relu_inplace(cur);
            },
            [&](const AvgPool& p) { cur = avg_pool(cur, p.size); },
            [&](const Linear<T>& l) {
              if (i + 1 != model.layers.size()) {
                throw ConfigError("linear classifier must be the last layer");
              }
              logits = linear_forward(l, cur);
            }},
        model.layers[i]);
    if (tr && !std::holds_alternative<Linear<T>>(model.layers[i])) {
      tr->output = cur;
    }
  }
  if (logits.empty()) throw ConfigError("model must end in a linear classifier");
  return logits;
}

template <RealScalar T>
bool is_trainable(const ModelLayer<T>& layer, Mode mode) {
  return layer_trainable(layer, mode, false) > 0;
}

template <RealScalar T>
void relu_backward(Tensor<T>& d, const Tensor<T>& out) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(out[i] > T{0})) d[i] = T{0};
  }
}

// Gradients of one sample's loss. Stops once no earlier layer trains.
template <RealScalar T>
BatchGrads<T> run_backward(const Model<T>& model,
                           const std::vector<LayerTrace<T>>& trace,
                           const std::vector<T>& d_logits, Mode mode) {
  const std::size_t n = model.layers.size();
  BatchGrads<T> grads(n);
  std::size_t earliest = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_trainable(model.layers[i], mode)) {
      earliest = i;
      break;
    }
  }
  Tensor<T> d({d_logits.size()}, d_logits);
  for (std::size_t ii = n; ii-- > earliest;) {
    const LayerTrace<T>& tr = trace[ii];
    const bool need_input = ii > earliest;
    auto& g = grads[ii];
    std::visit(
        Overload{
            [&](const SpatialConv<T>& c) {
              relu_backward(d, tr.output);
              ConvProblem<T> p{tr.input, c.kernel, c.pad};
              ConvGrads<T> cg = conv3d_backward(p, d);
              if (mode == Mode::kFS) g.push_back(std::move(cg.d_kernel.storage()));
              if (need_input) d = std::move(cg.d_input);
            },
            [&](const WinogradLayer<T>& w) {
              relu_backward(d, tr.output);
              LayerGrads<T> lg = backward(w, *tr.cache, d);
              if (mode == Mode::kFW) {
                g.push_back(std::move(lg.d_effective.storage()));
              } else if (mode == Mode::kLR) {
                if (!w.has_lowrank()) {
                  throw ConfigError("LR mode needs low-rank factors on every "
                                    "Winograd layer");
                }
                g.push_back(std::move(lg.d_row_factor.storage()));
                g.push_back(std::move(lg.d_col_factor.storage()));
              }
              if (need_input) d = std::move(lg.d_input);
            },
            [&](const CompactLayer<T>&) {
              throw ConfigError("compact layers are inference-only");
            },
            [&](const AvgPool& p) {
              d = avg_pool_backward(d, tr.input.dims(), p.size);
            },
            [&](const Linear<T>& l) {
              const std::size_t classes = l.weight.rows();
              const std::size_t features = l.weight.cols();
              std::vector<T> dw(classes * features);
              for (std::size_t o = 0; o < classes; ++o) {
                for (std::size_t f = 0; f < features; ++f) {
                  dw[o * features + f] = d[o] * tr.input[f];
                }
              }
              std::vector<T> db(d.storage());
              if (need_input) {
                Tensor<T> dx(tr.input.dims());
                for (std::size_t o = 0; o < classes; ++o) {
                  const T* w = l.weight.row(o).data();
                  for (std::size_t f = 0; f < features; ++f) dx[f] += d[o] * w[f];
                }
                d = std::move(dx);
              }
              g.push_back(std::move(dw));
              g.push_back(std::move(db));
            }},
        model.layers[ii]);
  }
  return grads;
}

template <RealScalar T>
std::vector<std::vector<T>*> parameters(ModelLayer<T>& layer, Mode mode) {
  return std::visit(
      Overload{
          [&](SpatialConv<T>& c) -> std::vector<std::vector<T>*> {
            if (mode == Mode::kFS) return {&c.kernel.storage()};
            return {};
          },
          [&](WinogradLayer<T>& w) -> std::vector<std::vector<T>*> {
            if (mode == Mode::kFW) return {&w.mutable_winograd_weight().storage()};
            if (mode == Mode::kLR) {
              return {&w.mutable_row_factor().storage(),
                      &w.mutable_col_factor().storage()};
            }
            return {};
          },
          [](CompactLayer<T>&) -> std::vector<std::vector<T>*> { return {}; },
          [](AvgPool&) -> std::vector<std::vector<T>*> { return {}; },
          [](Linear<T>& l) -> std::vector<std::vector<T>*> {
            return {&l.weight.storage(), &l.bias};
          }},
      layer);
}

int resolve_threads(int threads) {
  return threads > 0 ? threads : default_threads();
}

}  // namespace

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

template <RealScalar T>
std::vector<EpochRecord> train(Model<T>& model, const SynthDataset<T>& data,
                               const TrainConfig& cfg,
                               const SynthDataset<T>* eval_data,
                               const TrainHooks<T>& hooks,
                               std::size_t first_epoch) {
  if (cfg.epochs == 0 || cfg.batch_size == 0) {
    throw ConfigError("epochs and batch size must be positive");
  }
  if (!(cfg.lr > 0.0) || cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw ConfigError("learning rate must be positive, momentum in [0, 1)");
  }
  if (data.size() == 0) throw DataError("training set is empty");
  if (cfg.mode != model.mode) {
    throw ConfigError("train mode " + mode_name(cfg.mode) +
                      " does not match model mode " + mode_name(model.mode));
  }
  for (const auto& layer : model.layers) {
    if (std::holds_alternative<CompactLayer<T>>(layer)) {
      throw ConfigError("compact layers are inference-only");
    }
    if (const auto* w = std::get_if<WinogradLayer<T>>(&layer)) {
      if (cfg.mode == Mode::kLR && !w->has_lowrank()) {
        throw ConfigError("LR mode needs low-rank factors on every Winograd layer");
      }
    }
  }
  const int threads = resolve_threads(cfg.threads);
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  BatchGrads<T> velocity;
  std::vector<EpochRecord> log;

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::size_t epoch = first_epoch + e;
    const double lr =
        cfg.lr * std::pow(0.1, cfg.lr_decay_every
                                   ? static_cast<double>(epoch / cfg.lr_decay_every)
                                   : 0.0);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle = Rng(cfg.seed).split(0x5eed0000ULL + epoch);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.below(i)]);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
      const std::size_t bn = std::min(cfg.batch_size, n - b0);
      std::vector<BatchGrads<T>> per_sample(bn);
      std::vector<double> losses(bn);
      std::vector<int> hits(bn);
      parallel_for(bn, threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<LayerTrace<T>> trace;
        for (std::size_t s = lo; s < hi; ++s) {
          const std::size_t idx = order[b0 + s];
          const auto logits = run_model(model, data.sample(idx), &trace);
          const auto ce = cross_entropy(logits, data.labels[idx]);
          losses[s] = ce.loss;
          const auto best = std::max_element(logits.begin(), logits.end()) -
                            logits.begin();
          hits[s] = best == data.labels[idx] ? 1 : 0;
          per_sample[s] = run_backward(model, trace, ce.d_logits, cfg.mode);
        }
      });
      for (std::size_t s = 0; s < bn; ++s) {
        if (!std::isfinite(losses[s])) {
          throw NumericError("loss is not finite at epoch " +
                             std::to_string(epoch + 1));
        }
        loss_sum += losses[s];
        correct += static_cast<std::size_t>(hits[s]);
      }

      // Mean gradient over the batch, summed in sample order.
      BatchGrads<T> grads = std::move(per_sample[0]);
      const T inv = T{1} / static_cast<T>(bn);
      for (std::size_t l = 0; l < grads.size(); ++l) {
        for (std::size_t t = 0; t < grads[l].size(); ++t) {
          auto& acc = grads[l][t];
          for (std::size_t s = 1; s < bn; ++s) {
            const auto& src = per_sample[s][l][t];
            for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += src[k];
          }
          for (auto& v : acc) v *= inv;
        }
      }
      if (hooks.before_update) hooks.before_update(model, grads);

      if (velocity.empty()) {
        velocity.resize(grads.size());
        for (std::size_t l = 0; l < grads.size(); ++l) {
          for (const auto& g : grads[l]) velocity[l].emplace_back(g.size(), T{0});
        }
      }
      const T mu = static_cast<T>(cfg.momentum);
      const T step = static_cast<T>(lr);
      for (std::size_t l = 0; l < grads.size(); ++l) {
        if (grads[l].empty()) continue;
        auto params = parameters(model.layers[l], cfg.mode);
        if (params.size() != grads[l].size()) {
          throw ConfigError("gradient/parameter mismatch in layer " +
                            std::to_string(l));
        }
        for (std::size_t t = 0; t < params.size(); ++t) {
          auto& p = *params[t];
          auto& v = velocity[l][t];
          const auto& g = grads[l][t];
          for (std::size_t k = 0; k < p.size(); ++k) {
            v[k] = mu * v[k] + g[k];
            p[k] -= step * v[k];
          }
        }
      }
    }
    log.push_back({epoch + 1, "train", loss_sum / static_cast<double>(n),
                   static_cast<double>(correct) / static_cast<double>(n)});
    if (!std::isfinite(log.back().loss)) {
      throw NumericError("loss is not finite at epoch " + std::to_string(epoch + 1));
    }
    if (eval_data) {
      const EvalResult ev = evaluate_full(model, *eval_data, threads);
      log.push_back({epoch + 1, "eval", ev.loss, ev.accuracy});
    }
  }
  return log;
}

template <RealScalar T>
std::vector<T> predict(const Model<T>& model, const Tensor<T>& sample) {
  return run_model<T>(model, sample, nullptr);
}

template <RealScalar T>
std::vector<std::vector<T>> predict_all(const Model<T>& model,
                                        const SynthDataset<T>& data,
                                        int threads) {
  std::vector<std::vector<T>> out(data.size());
  parallel_for(data.size(), resolve_threads(threads),
               [&](std::size_t lo, std::size_t hi) {
                 for (std::size_t i = lo; i < hi; ++i) {
                   out[i] = predict(model, data.sample(i));
                 }
               });
  return out;
}

template <RealScalar T>
EvalResult evaluate_full(const Model<T>& model, const SynthDataset<T>& data,
                         int threads) {
  if (data.size() == 0) return {};
  const auto logits = predict_all(model, data, threads);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    loss += cross_entropy(logits[i], data.labels[i]).loss;
    const auto best =
        std::max_element(logits[i].begin(), logits[i].end()) - logits[i].begin();
    if (best == data.labels[i]) ++correct;
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

template <RealScalar T>
double evaluate(const Model<T>& model, const SynthDataset<T>& data,
                int threads) {
  return evaluate_full(model, data, threads).accuracy;
}

std::string train_log_csv(const std::vector<EpochRecord>& log) {
  std::string out = "epoch,split,loss,accuracy\n";
  char buf[128];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.9g,%.6f\n", r.epoch,
                  r.split.c_str(), r.loss, r.accuracy);
    out += buf;
  }
  return out;
}

#define WINO3D_INSTANTIATE(T)                                                  \
  template struct SynthDataset<T>;                                             \
  template struct Model<T>;                                                    \
  template SynthDataset<T> synth_dataset(std::uint64_t, std::size_t,           \
                                         std::size_t, const Dims&, double);    \
  template DataSplits<T> make_splits(std::uint64_t, std::size_t, std::size_t, \
                                     std::size_t, const Dims&, double);        \
  template Model<T> make_tiny_c3d(std::uint64_t, const TinyC3DConfig&);        \
  template Model<T> convert_to_winograd(const Model<T>&);                      \
  template void enable_lowrank(Model<T>&, const std::vector<std::size_t>&,     \
                               double);                                        \
  template std::size_t trainable_parameters(const Model<T>&, Mode);            \
  template std::size_t winograd_trainable_parameters(const Model<T>&, Mode);   \
  template CrossEntropy<T> cross_entropy(const std::vector<T>&, int);          \
  template std::vector<EpochRecord> train(Model<T>&, const SynthDataset<T>&,   \
                                          const TrainConfig&,                  \
                                          const SynthDataset<T>*,              \
                                          const TrainHooks<T>&, std::size_t);  \
  template std::vector<T> predict(const Model<T>&, const Tensor<T>&);          \
  template std::vector<std::vector<T>> predict_all(                            \
      const Model<T>&, const SynthDataset<T>&, int);                           \
  template EvalResult evaluate_full(const Model<T>&, const SynthDataset<T>&,   \
                                    int);                                      \
  template double evaluate(const Model<T>&, const SynthDataset<T>&, int);

WINO3D_INSTANTIATE(float)
WINO3D_INSTANTIATE(double)
#undef WINO3D_INSTANTIATE

}  // namespace wino3d
