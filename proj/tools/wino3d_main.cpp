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

// wino3d: command-line front end.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 validation
// failure (oracle mismatch, corrupt file, diverged training).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wino3d/bench.hpp"
#include "wino3d/lowrank.hpp"
#include "wino3d/model_io.hpp"
#include "wino3d/parallel.hpp"
#include "wino3d/pruning.hpp"
#include "wino3d/trainer.hpp"
#include "wino3d/transform.hpp"

namespace {

using namespace wino3d;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Dataset flags shared by train, prune and eval.
struct DataOptions {
  std::uint64_t data_seed = 1;
  std::size_t train_samples = 256;
  std::size_t eval_samples = 64;
  std::size_t classes = 4;
  std::vector<std::size_t> dims{1, 8, 16, 16};
  double noise = 0.1;

  void add(CLI::App* app) {
    app->add_option("--data-seed", data_seed, "Synthetic dataset seed");
    app->add_option("--train-samples", train_samples)->check(CLI::PositiveNumber);
    app->add_option("--eval-samples", eval_samples)->check(CLI::PositiveNumber);
    app->add_option("--classes", classes)->check(CLI::PositiveNumber);
    app->add_option("--sample-dims", dims, "C,D,H,W")->delimiter(',')->expected(4);
    app->add_option("--noise", noise);
  }

  DataSplits<float> splits() const {
    return make_splits<float>(data_seed, classes, train_samples, eval_samples,
                              Dims(dims.begin(), dims.end()), noise);
  }

  TinyC3DConfig model_config() const {
    TinyC3DConfig cfg;
    cfg.in_channels = dims.at(0);
    cfg.input_dims = {dims.at(1), dims.at(2), dims.at(3)};
    cfg.classes = classes;
    return cfg;
  }
};

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  std::size_t decay_every = 15;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs)->check(CLI::NonNegativeNumber);
    app->add_option("--batch-size", batch_size)->check(CLI::PositiveNumber);
    app->add_option("--lr", lr)->check(CLI::PositiveNumber);
    app->add_option("--decay-every", decay_every, "Divide lr by 10 every N epochs");
    app->add_option("--momentum", momentum);
    app->add_option("--seed", seed, "Seed for initialisation and shuffling");
  }

  TrainConfig config(Mode mode) const {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.lr = lr;
    tc.lr_decay_every = decay_every;
    tc.momentum = momentum;
    tc.seed = seed;
    tc.mode = mode;
    return tc;
  }
};

Model<float> to_mode(Model<float> model, Mode mode,
                     const std::vector<std::size_t>& rank_plan, double alpha) {
  if (mode == Mode::kFS) {
    if (model.mode != Mode::kFS) {
      throw ConfigError("cannot train a Winograd model in fs mode");
    }
    return model;
  }
  if (model.mode == Mode::kFS) model = convert_to_winograd(model);
  if (mode == Mode::kLR && model.mode != Mode::kLR) {
    enable_lowrank(model, rank_plan, alpha);
  }
  if (mode == Mode::kFW && model.mode == Mode::kLR) {
    throw ConfigError("model already carries low-rank factors; use lr mode");
  }
  model.mode = mode;
  return model;
}

void print_log(const std::vector<EpochRecord>& log) {
  for (const auto& r : log) {
    std::printf("epoch %zu %-5s loss %.5f acc %.4f\n", r.epoch, r.split.c_str(),
                r.loss, r.accuracy);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wino3d: low-rank, column-sparse 3D Winograd convolution"};
  app.set_help_all_flag("--help-all", "Show help for all subcommands");
  app.require_subcommand(0, 1);

  // gen-matrices ------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-matrices", "Write K, B, A, T_K, T_I, T_O as .lrt tensors");
  std::string gen_dir = ".";
  gen->add_option("--out-dir", gen_dir, "Output directory");

  // convert -----------------------------------------------------------------
  auto* conv = app.add_subcommand("convert", "Spatial model -> Winograd model (G_W = G T_K)");
  std::string conv_in, conv_out;
  conv->add_option("--in", conv_in)->required();
  conv->add_option("--out", conv_out)->required();

  // train -------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train TinyC3D on the synthetic dataset");
  std::string tr_mode = "fs", tr_in, tr_out, tr_log, tr_summary;
  std::vector<std::size_t> tr_ranks{8};
  double tr_alpha = 0.1;
  DataOptions tr_data;
  TrainOptions tr_opts;
  tr->add_option("--mode", tr_mode, "fs, fw or lr")
      ->check(CLI::IsMember({"fs", "fw", "lr"}));
  tr->add_option("--in", tr_in, "Start from this model instead of a fresh one");
  tr->add_option("--out", tr_out, "Write the trained model (.lrw)");
  tr->add_option("--log", tr_log, "Per-epoch CSV log");
  tr->add_option("--summary", tr_summary, "Append a one-line mode comparison CSV");
  tr->add_option("--rank-plan", tr_ranks, "Ranks per Winograd layer (lr mode)")
      ->delimiter(',');
  tr->add_option("--alpha", tr_alpha, "Low-rank initialisation scale");
  tr_data.add(tr);
  tr_opts.add(tr);

  // prune -------------------------------------------------------------------
  auto* pr = app.add_subcommand("prune", "Score and prune Winograd columns, then retrain");
  std::string pr_in, pr_out, pr_log, pr_indicator = "full-grad";
  double pr_sparsity = 0.5, pr_alpha = 0.1;
  std::vector<std::size_t> pr_ranks{8};
  std::size_t pr_score = 2, pr_retrain = 10;
  DataOptions pr_data;
  TrainOptions pr_opts;
  pr->add_option("--in", pr_in, "Input model (spatial models are converted first)");
  pr->add_option("--out", pr_out, "Write the pruned model (.lrw)");
  pr->add_option("--log", pr_log, "Per-epoch CSV log");
  pr->add_option("--sparsity", pr_sparsity, "Fraction of columns removed, in [0, 1)");
  pr->add_option("--rank-plan", pr_ranks)->delimiter(',');
  pr->add_option("--alpha", pr_alpha);
  pr->add_option("--score-epochs", pr_score);
  pr->add_option("--retrain-epochs", pr_retrain);
  pr->add_option("--indicator", pr_indicator)
      ->check(CLI::IsMember({"mag-delta", "mag-full", "grad", "delta-grad", "full-grad"}));
  pr_data.add(pr);
  pr_opts.add(pr);

  // finalize ----------------------------------------------------------------
  auto* fin = app.add_subcommand("finalize", "Fold low-rank updates and store compact layers");
  std::string fin_in, fin_out;
  fin->add_option("--in", fin_in)->required();
  fin->add_option("--out", fin_out)->required();

  // eval --------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "Accuracy of a model on the synthetic eval split");
  std::string ev_in, ev_pred;
  bool ev_train_split = false;
  DataOptions ev_data;
  ev->add_option("--in", ev_in)->required();
  ev->add_option("--predictions", ev_pred, "Write argmax predictions as CSV");
  ev->add_flag("--train-split", ev_train_split, "Evaluate on the training split");
  ev_data.add(ev);

  // bench -------------------------------------------------------------------
  auto* be = app.add_subcommand("bench", "Time im2col, Winograd and sparse Winograd");
  std::vector<std::string> be_strats{"im2col", "winograd", "sparse"};
  std::vector<double> be_sparsities{0, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::size_t> be_shape{64, 64, 8, 28, 28};
  std::size_t be_reps = 21, be_warmup = 3;
  std::string be_out, be_layer = "c3d_conv";
  std::uint64_t be_seed = 0;
  int be_threads = 0;
  be->add_option("--strategies", be_strats)->delimiter(',')
      ->check(CLI::IsMember({"im2col", "winograd", "sparse"}));
  be->add_option("--sparsities", be_sparsities)->delimiter(',');
  be->add_option("--shape", be_shape, "Ci,Co,D,H,W")->delimiter(',')->expected(5);
  be->add_option("--reps", be_reps);
  be->add_option("--warmup", be_warmup);
  be->add_option("--out", be_out, "CSV output (stdout if omitted)");
  be->add_option("--layer", be_layer, "Layer id recorded in the CSV");
  be->add_option("--seed", be_seed);
  be->add_option("--threads", be_threads, "Defaults to WINO3D_THREADS or 1");

  // spectrum ----------------------------------------------------------------
  auto* sp = app.add_subcommand("spectrum", "Singular-value spectrum of each Winograd layer");
  std::string sp_in, sp_out;
  sp->add_option("--in", sp_in)->required();
  sp->add_option("--out", sp_out, "CSV output (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const TransformSet& ts = transform_set(kF2x3);
      const BaseMatrices bm = base_matrices(kF2x3);
      const std::filesystem::path dir(gen_dir);
      std::filesystem::create_directories(dir);
      save_tensor(matrix_to_tensor(bm.K), dir / "K.lrt");
      save_tensor(matrix_to_tensor(bm.B), dir / "B.lrt");
      save_tensor(matrix_to_tensor(bm.A), dir / "A.lrt");
      save_tensor(matrix_to_tensor(ts.T_K), dir / "T_K.lrt");
      save_tensor(matrix_to_tensor(ts.T_I), dir / "T_I.lrt");
      save_tensor(matrix_to_tensor(ts.T_O), dir / "T_O.lrt");
      std::printf("wrote K, B, A, T_K (%zux%zu), T_I (%zux%zu), T_O (%zux%zu) to %s\n",
                  ts.T_K.rows(), ts.T_K.cols(), ts.T_I.rows(), ts.T_I.cols(),
                  ts.T_O.rows(), ts.T_O.cols(), dir.string().c_str());
    } else if (conv->parsed()) {
      const auto model = load_model<float>(conv_in);
      if (model.mode != Mode::kFS) throw ConfigError("input is not a spatial model");
      save_model(convert_to_winograd(model), conv_out);
      std::printf("converted %s -> %s\n", conv_in.c_str(), conv_out.c_str());
    } else if (tr->parsed()) {
      const Mode mode = parse_mode(tr_mode);
      const auto data = tr_data.splits();
      Model<float> model = tr_in.empty()
                               ? make_tiny_c3d<float>(tr_opts.seed, tr_data.model_config())
                               : load_model<float>(tr_in);
      model = to_mode(std::move(model), mode, tr_ranks, tr_alpha);
      std::vector<EpochRecord> log;
      if (tr_opts.epochs > 0) {
        log = train(model, data.train, tr_opts.config(mode), &data.eval);
        print_log(log);
      }
      const double train_acc = evaluate(model, data.train);
      const double eval_acc = evaluate(model, data.eval);
      std::printf("mode %s trainable %zu (winograd %zu) train %.4f eval %.4f\n",
                  tr_mode.c_str(), trainable_parameters(model, mode),
                  winograd_trainable_parameters(model, mode), train_acc, eval_acc);
      if (!tr_log.empty()) write_text(tr_log, train_log_csv(log));
      if (!tr_summary.empty()) {
        const bool fresh = !std::filesystem::exists(tr_summary);
        std::ofstream out(tr_summary, std::ios::app);
        if (!out) throw IoError("cannot open " + tr_summary);
        if (fresh) {
          out << "mode,epochs,seed,trainable_params,winograd_params,"
                 "train_accuracy,eval_accuracy\n";
        }
        out << tr_mode << ',' << tr_opts.epochs << ',' << tr_opts.seed << ','
            << trainable_parameters(model, mode) << ','
            << winograd_trainable_parameters(model, mode) << ',' << train_acc
            << ',' << eval_acc << '\n';
      }
      if (!tr_out.empty()) save_model(model, tr_out);
    } else if (pr->parsed()) {
      PruneConfig cfg;
      cfg.sparsity = pr_sparsity;
      kept_columns_for(cfg.sparsity, kF2x3.tile_volume());
      cfg.score_epochs = pr_score;
      cfg.retrain_epochs = pr_retrain;
      cfg.rank_plan = pr_ranks;
      cfg.alpha = pr_alpha;
      cfg.indicator = parse_indicator(pr_indicator);
      cfg.train = pr_opts.config(Mode::kLR);
      const auto data = pr_data.splits();
      Model<float> model = pr_in.empty()
                               ? make_tiny_c3d<float>(pr_opts.seed, pr_data.model_config())
                               : load_model<float>(pr_in);
      if (model.mode == Mode::kFS) model = convert_to_winograd(model);
      const auto res = prune_pipeline(model, data.train, cfg, &data.eval);
      for (const auto& r : res.log) {
        std::printf("epoch %zu %-7s %-5s loss %.5f acc %.4f\n", r.epoch,
                    r.stage.c_str(), r.split.c_str(), r.loss, r.accuracy);
      }
      for (std::size_t k = 0; k < res.masks.size(); ++k) {
        std::printf("winograd layer %zu keeps %zu columns\n", k,
                    res.masks[k].locations.size());
      }
      std::printf("eval accuracy %.4f\n", evaluate(model, data.eval));
      if (!pr_log.empty()) write_text(pr_log, prune_log_csv(res.log));
      if (!pr_out.empty()) save_model(model, pr_out);
    } else if (fin->parsed()) {
      const auto model = load_model<float>(fin_in);
      if (model.winograd_indices().empty()) {
        throw ConfigError("model has no Winograd layers to finalize");
      }
      save_model(finalize_model(model), fin_out);
      std::printf("finalized %s -> %s\n", fin_in.c_str(), fin_out.c_str());
    } else if (ev->parsed()) {
      const auto model = load_model<float>(ev_in);
      const auto data = ev_data.splits();
      const auto& ds = ev_train_split ? data.train : data.eval;
      const auto logits = predict_all(model, ds);
      std::size_t correct = 0;
      std::string pred_csv = "index,label,prediction\n";
      for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto best = static_cast<int>(
            std::max_element(logits[i].begin(), logits[i].end()) - logits[i].begin());
        correct += best == ds.labels[i] ? 1 : 0;
        pred_csv += std::to_string(i) + "," + std::to_string(ds.labels[i]) + "," +
                    std::to_string(best) + "\n";
      }
      std::printf("accuracy %.6f (%zu/%zu)\n",
                  static_cast<double>(correct) / static_cast<double>(ds.size()),
                  correct, ds.size());
      if (!ev_pred.empty()) write_text(ev_pred, pred_csv);
    } else if (be->parsed()) {
      const int threads = be_threads > 0 ? be_threads : default_threads();
      BenchCase bc = make_bench_case(be_layer, be_shape[0], be_shape[1],
                                     be_shape[2], be_shape[3], be_shape[4], be_seed);
      std::vector<BenchRow> rows;
      for (const auto& name : be_strats) {
        const Strategy s = parse_strategy(name);
        if (s == Strategy::kSparse) {
          auto r = bench_sparse_sweep(bc, be_sparsities, be_reps, threads, be_warmup);
          rows.insert(rows.end(), r.begin(), r.end());
        } else {
          auto r = bench_layer(s, bc, be_reps, threads, be_warmup);
          rows.insert(rows.end(), r.begin(), r.end());
        }
      }
      const std::string csv = bench_report(rows);
      if (be_out.empty()) {
        std::fputs(csv.c_str(), stdout);
      } else {
        write_text(be_out, csv);
      }
    } else if (sp->parsed()) {
      const auto model = load_model<float>(sp_in);
      std::vector<std::pair<std::string, SpectrumReport>> reports;
      for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (const auto* w = std::get_if<WinogradLayer<float>>(&model.layers[i])) {
          reports.emplace_back("layer" + std::to_string(i),
                               spectrum_report(w->winograd_weight()));
        }
      }
      if (reports.empty()) throw ConfigError("model has no Winograd layers");
      const std::string csv = spectrum_csv(reports);
      if (sp_out.empty()) {
        std::fputs(csv.c_str(), stdout);
      } else {
        write_text(sp_out, csv);
      }
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation failed: %s\n", e.what());
    return kExitValidation;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitValidation;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitValidation;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitOk;
}
