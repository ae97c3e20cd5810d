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

// Column-wise pruning of Winograd layers.
//
// Each Winograd position (column of G) gets a score
//
//   S += 1/(C_i²C_o²) · colsum|X| ⊙ colsum|dG_r·dG_c|
//
// accumulated every batch, where X is G_W + G_r·G_c (FULL) or G_r·G_c
// (DELTA). Magnitude-only indicators drop the gradient factor and GRAD drops
// the magnitude factor. The l best columns survive.

#ifndef WINO3D_PRUNING_HPP_
#define WINO3D_PRUNING_HPP_

#include <string>
#include <vector>

#include "wino3d/layer.hpp"
#include "wino3d/trainer.hpp"

namespace wino3d {

enum class Indicator : std::uint8_t {
  kMagDelta,   // |G_r·G_c|
  kMagFull,    // |G_W + G_r·G_c|
  kGrad,       // |dG_r·dG_c|
  kDeltaGrad,  // |G_r·G_c| ⊙ |dG_r·dG_c|
  kFullGrad,   // |G_W + G_r·G_c| ⊙ |dG_r·dG_c|
};

std::string indicator_name(Indicator ind);
/// Accepts mag-delta, mag-full, grad, delta-grad, full-grad.
Indicator parse_indicator(const std::string& name);

struct ScoreState {
  std::vector<double> S;
  Indicator indicator = Indicator::kFullGrad;

  ScoreState() = default;
  explicit ScoreState(std::size_t width,
                      Indicator ind = Indicator::kFullGrad)
      : S(width, 0.0), indicator(ind) {}
};

/// One accumulation step from explicit matrices. `weight` is G_W
/// (C_oC_i x w), the factors are C_oC_i x s and s x w.
template <RealScalar T>
ScoreState score_step(ScoreState st, const Matrix<T>& weight,
                      const Matrix<T>& row_factor, const Matrix<T>& col_factor,
                      const Matrix<T>& d_row_factor,
                      const Matrix<T>& d_col_factor, std::size_t out_channels,
                      std::size_t in_channels);

template <RealScalar T>
ScoreState score_step(ScoreState st, const WinogradLayer<T>& layer,
                      const Matrix<T>& d_row_factor,
                      const Matrix<T>& d_col_factor);

struct MaskSelection {
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> locations;  // ascending
};

/// Keeps the l highest scores; ties go to the lower index.
MaskSelection build_mask(const std::vector<double>& scores, std::size_t kept);

/// l = round((1 - sparsity)·width), at least 1. Sparsity must lie in [0, 1).
std::size_t kept_columns_for(double sparsity, std::size_t width);

struct PruneConfig {
  double sparsity = 0.5;
  std::size_t score_epochs = 2;
  std::size_t retrain_epochs = 10;
  std::vector<std::size_t> rank_plan{8};
  double alpha = 0.1;
  Indicator indicator = Indicator::kFullGrad;
  TrainConfig train;  // lr, decay, momentum, batch size, seed, threads
};

struct PruneLogRow {
  std::size_t epoch = 0;
  std::string stage;  // "score" or "retrain"
  std::string split;  // "train" or "eval"
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::size_t> kept;  // l per Winograd layer
};

template <RealScalar T>
struct PruneResult {
  std::vector<PruneLogRow> log;
  std::vector<ScoreState> scores;  // per Winograd layer
  std::vector<MaskSelection> masks;
};

/// Stage 1 trains G_r/G_c for score_epochs while accumulating scores, then
/// fixes per-layer masks; stage 2 retrains G_r/G_c under the masks. Layers
/// without low-rank factors are initialised from cfg.rank_plan first.
/// Throws DataError on an empty dataset.
template <RealScalar T>
PruneResult<T> prune_pipeline(Model<T>& model, const SynthDataset<T>& data,
                              const PruneConfig& cfg,
                              const SynthDataset<T>* eval_data = nullptr);

/// CSV with columns epoch,stage,split,loss,accuracy,l.
std::string prune_log_csv(const std::vector<PruneLogRow>& log);

/// Folds G_r·G_c into G_W, applies the mask and compacts.
template <RealScalar T>
CompactLayer<T> finalize(const WinogradLayer<T>& layer);

/// Replaces every Winograd layer of the model with its finalized form.
template <RealScalar T>
Model<T> finalize_model(const Model<T>& model);

}  // namespace wino3d

#endif  // WINO3D_PRUNING_HPP_
