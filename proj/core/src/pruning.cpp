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

#include "wino3d/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "wino3d/lowrank.hpp"

namespace wino3d {

std::string indicator_name(Indicator ind) {
  switch (ind) {
    case Indicator::kMagDelta: return "mag-delta";
    case Indicator::kMagFull: return "mag-full";
    case Indicator::kGrad: return "grad";
    case Indicator::kDeltaGrad: return "delta-grad";
    case Indicator::kFullGrad: return "full-grad";
  }
  return "?";
}

Indicator parse_indicator(const std::string& name) {
  for (Indicator ind : {Indicator::kMagDelta, Indicator::kMagFull,
                        Indicator::kGrad, Indicator::kDeltaGrad,
                        Indicator::kFullGrad}) {
    if (indicator_name(ind) == name) return ind;
  }
  throw ConfigError("unknown indicator '" + name + "'");
}

namespace {

template <RealScalar T>
std::vector<double> abs_column_sums(const Matrix<T>& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out[c] += std::abs(static_cast<double>(row[c]));
    }
  }
  return out;
}

}  // namespace

template <RealScalar T>
ScoreState score_step(ScoreState st, const Matrix<T>& weight,
                      const Matrix<T>& row_factor, const Matrix<T>& col_factor,
                      const Matrix<T>& d_row_factor,
                      const Matrix<T>& d_col_factor, std::size_t out_channels,
                      std::size_t in_channels) {
  const std::size_t rows = out_channels * in_channels;
  const std::size_t width = weight.cols();
  if (rows == 0 || weight.rows() != rows || st.S.size() != width ||
      row_factor.rows() != rows || col_factor.cols() != width ||
      row_factor.cols() != col_factor.rows() || d_row_factor.rows() != rows ||
      d_col_factor.cols() != width ||
      d_row_factor.cols() != d_col_factor.rows()) {
    throw ShapeError("score_step: inconsistent shapes");
  }
  const bool needs_mag = st.indicator != Indicator::kGrad;
  const bool needs_grad = st.indicator != Indicator::kMagDelta &&
                          st.indicator != Indicator::kMagFull;
  const bool full = st.indicator == Indicator::kMagFull ||
                    st.indicator == Indicator::kFullGrad;

  std::vector<double> mag(width, 1.0);
  if (needs_mag) {
    Matrix<T> x = matmul(row_factor, col_factor);
    if (full) {
      for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += weight.data()[i];
    }
    mag = abs_column_sums(x);
  }
  std::vector<double> grad(width, 1.0);
  if (needs_grad) grad = abs_column_sums(matmul(d_row_factor, d_col_factor));

  const double ci = static_cast<double>(in_channels);
  const double co = static_cast<double>(out_channels);
  const double norm = 1.0 / (ci * ci * co * co);
  for (std::size_t j = 0; j < width; ++j) st.S[j] += norm * mag[j] * grad[j];
  return st;
}

template <RealScalar T>
ScoreState score_step(ScoreState st, const WinogradLayer<T>& layer,
                      const Matrix<T>& d_row_factor,
                      const Matrix<T>& d_col_factor) {
  if (!layer.has_lowrank()) {
    throw ShapeError("score_step needs a layer with low-rank factors");
  }
  return score_step(std::move(st), layer.winograd_weight(), layer.row_factor(),
                    layer.col_factor(), d_row_factor, d_col_factor,
                    layer.out_channels(), layer.in_channels());
}

MaskSelection build_mask(const std::vector<double>& scores, std::size_t kept) {
  if (kept == 0 || kept > scores.size()) {
    throw RankError("kept columns " + std::to_string(kept) + " outside [1, " +
                    std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  MaskSelection sel;
  sel.locations.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kept));
  std::sort(sel.locations.begin(), sel.locations.end());
  sel.mask.assign(scores.size(), 0);
  for (std::size_t i : sel.locations) sel.mask[i] = 1;
  return sel;
}

std::size_t kept_columns_for(double sparsity, std::size_t width) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1)");
  }
  const double l = std::round((1.0 - sparsity) * static_cast<double>(width));
  return std::max<std::size_t>(1, static_cast<std::size_t>(l));
}

template <RealScalar T>
PruneResult<T> prune_pipeline(Model<T>& model, const SynthDataset<T>& data,
                              const PruneConfig& cfg,
                              const SynthDataset<T>* eval_data) {
  if (data.size() == 0) throw DataError("pruning dataset is empty");
  const auto idx = model.winograd_indices();
  if (idx.empty()) throw ConfigError("model has no Winograd layers");
  const std::size_t kept_target = kept_columns_for(
      cfg.sparsity,
      std::get<WinogradLayer<T>>(model.layers[idx.front()]).tile_volume());

  bool have_factors = true;
  for (std::size_t i : idx) {
    have_factors =
        have_factors && std::get<WinogradLayer<T>>(model.layers[i]).has_lowrank();
  }
  if (!have_factors) enable_lowrank(model, cfg.rank_plan, cfg.alpha);
  model.mode = Mode::kLR;

  PruneResult<T> res;
  for (std::size_t i : idx) {
    const auto& w = std::get<WinogradLayer<T>>(model.layers[i]);
    res.scores.emplace_back(w.tile_volume(), cfg.indicator);
  }
  auto kept_now = [&] {
    std::vector<std::size_t> k;
    for (std::size_t i : idx) {
      k.push_back(std::get<WinogradLayer<T>>(model.layers[i]).kept_columns());
    }
    return k;
  };
  auto append = [&](const std::vector<EpochRecord>& recs, const char* stage) {
    const auto k = kept_now();
    for (const auto& r : recs) {
      res.log.push_back({r.epoch, stage, r.split, r.loss, r.accuracy, k});
    }
  };

  TrainConfig tc = cfg.train;
  tc.mode = Mode::kLR;
  if (cfg.score_epochs > 0) {
    TrainHooks<T> hooks;
    hooks.before_update = [&](const Model<T>& m, const BatchGrads<T>& grads) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& w = std::get<WinogradLayer<T>>(m.layers[idx[k]]);
        const auto& g = grads[idx[k]];
        const Matrix<T> d_row(w.row_factor().rows(), w.rank(), g.at(0));
        const Matrix<T> d_col(w.rank(), w.tile_volume(), g.at(1));
        res.scores[k] = score_step(std::move(res.scores[k]), w, d_row, d_col);
      }
    };
    tc.epochs = cfg.score_epochs;
    append(train(model, data, tc, eval_data, hooks, 0), "score");
  }

  for (std::size_t k = 0; k < idx.size(); ++k) {
    MaskSelection sel = build_mask(res.scores[k].S, kept_target);
    std::get<WinogradLayer<T>>(model.layers[idx[k]]).set_mask(sel.mask);
    res.masks.push_back(std::move(sel));
  }

  if (cfg.retrain_epochs > 0) {
    tc.epochs = cfg.retrain_epochs;
    append(train(model, data, tc, eval_data, {}, cfg.score_epochs), "retrain");
  }
  return res;
}

std::string prune_log_csv(const std::vector<PruneLogRow>& log) {
  std::string out = "epoch,stage,split,loss,accuracy,l\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.9g,%.6f,", r.epoch,
                  r.stage.c_str(), r.split.c_str(), r.loss, r.accuracy);
    out += buf;
    for (std::size_t i = 0; i < r.kept.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(r.kept[i]);
    }
    out += '\n';
  }
  return out;
}

template <RealScalar T>
CompactLayer<T> finalize(const WinogradLayer<T>& layer) {
  return compact(layer);
}

template <RealScalar T>
Model<T> finalize_model(const Model<T>& model) {
  Model<T> out;
  out.mode = model.mode;
  for (const auto& layer : model.layers) {
    if (const auto* w = std::get_if<WinogradLayer<T>>(&layer)) {
      out.layers.emplace_back(finalize(*w));
    } else {
      out.layers.push_back(layer);
    }
  }
  return out;
}

#define WINO3D_INSTANTIATE(T)                                                 \
  template ScoreState score_step(ScoreState, const Matrix<T>&,                \
                                 const Matrix<T>&, const Matrix<T>&,          \
                                 const Matrix<T>&, const Matrix<T>&,          \
                                 std::size_t, std::size_t);                   \
  template ScoreState score_step(ScoreState, const WinogradLayer<T>&,         \
                                 const Matrix<T>&, const Matrix<T>&);         \
  template PruneResult<T> prune_pipeline(Model<T>&, const SynthDataset<T>&,   \
                                         const PruneConfig&,                  \
                                         const SynthDataset<T>*);             \
  template CompactLayer<T> finalize(const WinogradLayer<T>&);                 \
  template Model<T> finalize_model(const Model<T>&);

WINO3D_INSTANTIATE(float)
WINO3D_INSTANTIATE(double)
#undef WINO3D_INSTANTIATE

}  // namespace wino3d
