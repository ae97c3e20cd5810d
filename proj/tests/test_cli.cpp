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
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wino3d/model_io.hpp"
#include "wino3d/tensor.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(WINO3D_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("wino3d_cli_" + std::string(::testing::UnitTest::GetInstance()
                                            ->current_test_info()
                                            ->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string kData =
    " --train-samples 16 --eval-samples 16 --sample-dims 1,4,8,8 --data-seed 3";

std::string accuracy_line(const std::string& out) {
  const auto p = out.find("accuracy");
  return p == std::string::npos ? "" : out.substr(p, out.find('\n', p) - p);
}

}  // namespace

TEST_F(CliTest, NoArgumentsIsUsageError) {
  const auto r = run("");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(CliTest, PruneRejectsFullSparsity) {
  EXPECT_EQ(run("prune --sparsity 1.0").code, 1);
}

TEST_F(CliTest, GenMatricesWritesAllSix) {
  ASSERT_EQ(run("gen-matrices --out-dir " + path("m")).code, 0);
  const auto tk = wino3d::load_tensor<double>(path("m/T_K.lrt"));
  EXPECT_EQ(tk.dims(), (wino3d::Dims{27, 64}));
  for (const char* n : {"K", "B", "A", "T_I", "T_O"})
    EXPECT_TRUE(fs::exists(path(std::string("m/") + n + ".lrt"))) << n;
}

TEST_F(CliTest, ConvertPreservesAccuracy) {
  ASSERT_EQ(run("train --mode fs --epochs 1 --seed 2 --out " + path("fs.lrw") + kData).code, 0);
  ASSERT_EQ(run("convert --in " + path("fs.lrw") + " --out " + path("fw.lrw")).code, 0);
  const auto a = run("eval --in " + path("fs.lrw") + " --predictions " + path("a.csv") + kData);
  const auto b = run("eval --in " + path("fw.lrw") + " --predictions " + path("b.csv") + kData);
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_FALSE(accuracy_line(a.out).empty());
  EXPECT_EQ(accuracy_line(a.out), accuracy_line(b.out));
  std::ifstream fa(path("a.csv")), fb(path("b.csv"));
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
}

TEST_F(CliTest, TrainPruneFinalizeEvalChain) {
  ASSERT_EQ(run("train --mode lr --epochs 1 --rank-plan 4 --log " + path("lr.csv") +
                " --out " + path("lr.lrw") + kData).code, 0);
  std::ifstream log(path("lr.csv"));
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, "epoch,split,loss,accuracy");
  ASSERT_EQ(run("prune --in " + path("lr.lrw") + " --sparsity 0.5 --score-epochs 1"
                " --retrain-epochs 1 --out " + path("pr.lrw") + " --log " + path("pr.csv") +
                kData).code, 0);
  ASSERT_EQ(run("finalize --in " + path("pr.lrw") + " --out " + path("fin.lrw")).code, 0);
  const auto fin = wino3d::load_model<float>(path("fin.lrw"));
  std::size_t compact = 0;
  for (const auto& l : fin.layers)
    if (const auto* c = std::get_if<wino3d::CompactLayer<float>>(&l)) {
      EXPECT_EQ(c->kept_columns(), 32u);
      ++compact;
    }
  EXPECT_EQ(compact, 2u);
  const auto a = run("eval --in " + path("pr.lrw") + kData);
  const auto b = run("eval --in " + path("fin.lrw") + kData);
  EXPECT_EQ(accuracy_line(a.out), accuracy_line(b.out));
  EXPECT_EQ(run("spectrum --in " + path("lr.lrw") + " --out " + path("s.csv")).code, 0);
}

TEST_F(CliTest, TrainIsDeterministicGivenSeed) {
  ASSERT_EQ(run("train --mode fs --epochs 1 --seed 5 --out " + path("a.lrw") + kData).code, 0);
  ASSERT_EQ(run("train --mode fs --epochs 1 --seed 5 --out " + path("b.lrw") + kData).code, 0);
  std::ifstream fa(path("a.lrw"), std::ios::binary), fb(path("b.lrw"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
}

TEST_F(CliTest, BenchWritesCsv) {
  ASSERT_EQ(run("bench --strategies im2col,winograd,sparse --sparsities 0,0.5 --shape 2,2,4,4,4"
                " --reps 11 --out " + path("b.csv")).code, 0);
  std::ifstream in(path("b.csv"));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "strategy,layer,Ci,Co,D,H,W,sparsity,l,ew_mults,total_mults,ns_median,reps,threads");
}

TEST_F(CliTest, CorruptModelIsValidationExit) {
  { std::ofstream(path("bad.lrw")) << "XXXXjunk"; }
  EXPECT_EQ(run("eval --in " + path("bad.lrw")).code, 2);
}
