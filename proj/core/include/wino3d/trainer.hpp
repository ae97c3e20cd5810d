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

// Small 3D CNNs, a synthetic video dataset and a plain SGD trainer.
//
// Every conv-like layer (spatial, Winograd, compact) is followed by a ReLU.
// Three training modes exist:
//   FS  spatial kernels and the classifier train
//   FW  Winograd weights G_W and the classifier train
//   LR  G_W is frozen; low-rank factors G_r, G_c and the classifier train
// The first convolution stays spatial in every mode and is frozen in FW/LR.

#ifndef WINO3D_TRAINER_HPP_
#define WINO3D_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "wino3d/layer.hpp"
#include "wino3d/tensor.hpp"

namespace wino3d {

enum class Mode : std::uint8_t { kFS, kFW, kLR };

std::string mode_name(Mode mode);
/// Accepts "fs", "fw", "lr"; throws ConfigError otherwise.
Mode parse_mode(const std::string& name);

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

template <RealScalar T>
struct SynthDataset {
  Tensor<T> samples;        // N x C x D x H x W
  std::vector<int> labels;  // label i = i mod classes
  std::size_t classes = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  Dims sample_dims() const;
  Tensor<T> sample(std::size_t i) const;
};

/// Each sample is a Gaussian blob drifting across the H x W plane as the
/// depth (time) axis advances. The drift direction is set by the class; start
/// position, speed and additive noise are random. Throws ConfigError when the
/// frame is too small to hold the trajectory.
template <RealScalar T>
SynthDataset<T> synth_dataset(std::uint64_t seed, std::size_t classes,
                              std::size_t n, const Dims& dims,
                              double noise = 0.1);

template <RealScalar T>
struct DataSplits {
  SynthDataset<T> train;
  SynthDataset<T> eval;
};

/// Disjoint train/eval sets drawn from one seed (the eval set uses a derived
/// seed, so its samples never coincide with training samples).
template <RealScalar T>
DataSplits<T> make_splits(std::uint64_t seed, std::size_t classes,
                          std::size_t n_train, std::size_t n_eval,
                          const Dims& dims, double noise = 0.1);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

template <RealScalar T>
struct SpatialConv {
  Tensor<T> kernel;  // C_o x C_i x r x r x r
  std::size_t pad = 0;
};

struct AvgPool {
  std::size_t size = 2;  // cubic window and stride; remainders are dropped
};

template <RealScalar T>
struct Linear {
  Matrix<T> weight;  // classes x features
  std::vector<T> bias;
};

template <RealScalar T>
using ModelLayer = std::variant<SpatialConv<T>, WinogradLayer<T>,
                                CompactLayer<T>, AvgPool, Linear<T>>;

template <RealScalar T>
struct Model {
  std::vector<ModelLayer<T>> layers;
  Mode mode = Mode::kFS;

  /// Indices of WinogradLayer entries, in order.
  std::vector<std::size_t> winograd_indices() const;
  std::size_t classes() const;
};

struct TinyC3DConfig {
  std::size_t in_channels = 1;
  std::array<std::size_t, 3> widths{8, 16, 16};
  Dims input_dims{8, 16, 16};  // D, H, W
  std::size_t classes = 4;
};

/// conv(C→w0) → ReLU → conv(w0→w1) → ReLU → pool → conv(w1→w2) → ReLU →
/// pool → linear, all 3x3x3 convs with pad 1, He-normal initialisation.
template <RealScalar T>
Model<T> make_tiny_c3d(std::uint64_t seed, const TinyC3DConfig& cfg = {});

/// Replaces every spatial 3x3x3 conv except the first with a Winograd layer
/// holding G_W = G·T_K. The result is in FW mode.
template <RealScalar T>
Model<T> convert_to_winograd(const Model<T>& model);

/// Initialises low-rank factors on every Winograd layer from its SVD and
/// switches to LR mode. A single-entry plan applies to all layers.
template <RealScalar T>
void enable_lowrank(Model<T>& model, const std::vector<std::size_t>& rank_plan,
                    double alpha = 0.1);

/// Parameters the given mode would update.
template <RealScalar T>
std::size_t trainable_parameters(const Model<T>& model, Mode mode);

/// Trainable parameters held by Winograd layers alone.
template <RealScalar T>
std::size_t winograd_trainable_parameters(const Model<T>& model, Mode mode);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

template <RealScalar T>
struct CrossEntropy {
  double loss = 0.0;
  std::vector<T> d_logits;  // softmax - onehot
};

template <RealScalar T>
CrossEntropy<T> cross_entropy(const std::vector<T>& logits, int label);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  std::size_t lr_decay_every = 15;  // lr /= 10 every this many epochs
  double momentum = 0.9;
  std::uint64_t seed = 0;
  Mode mode = Mode::kFS;
  int threads = 0;  // 0: default_threads()
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;  // "train" or "eval"
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Per-layer gradients of one batch (mean over its samples). Entry i lists
/// the gradients of layer i's trainable tensors, in the order
///   SpatialConv: d_kernel; Winograd FW: dG_W; Winograd LR: dG_r, dG_c;
///   Linear: dW, db; frozen layers: none.
template <RealScalar T>
using BatchGrads = std::vector<std::vector<std::vector<T>>>;

template <RealScalar T>
struct TrainHooks {
  /// Runs after each batch's backward pass, before the weight update.
  std::function<void(const Model<T>&, const BatchGrads<T>&)> before_update;
};

/// SGD with momentum on mean cross-entropy. Throws NumericError naming the
/// epoch if the loss stops being finite, ConfigError when the mode does not
/// match the model.
template <RealScalar T>
std::vector<EpochRecord> train(Model<T>& model, const SynthDataset<T>& data,
                               const TrainConfig& cfg,
                               const SynthDataset<T>* eval_data = nullptr,
                               const TrainHooks<T>& hooks = {},
                               std::size_t first_epoch = 0);

/// Logits of one sample.
template <RealScalar T>
std::vector<T> predict(const Model<T>& model, const Tensor<T>& sample);

/// Logits for every sample, computed in parallel.
template <RealScalar T>
std::vector<std::vector<T>> predict_all(const Model<T>& model,
                                        const SynthDataset<T>& data,
                                        int threads = 0);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

template <RealScalar T>
EvalResult evaluate_full(const Model<T>& model, const SynthDataset<T>& data,
                         int threads = 0);

/// Argmax accuracy in [0, 1]; ties go to the lowest class index.
template <RealScalar T>
double evaluate(const Model<T>& model, const SynthDataset<T>& data,
                int threads = 0);

/// CSV with columns epoch,split,loss,accuracy.
std::string train_log_csv(const std::vector<EpochRecord>& log);

}  // namespace wino3d

#endif  // WINO3D_TRAINER_HPP_
