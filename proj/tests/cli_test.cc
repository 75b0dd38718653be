// Copyright 2026 The MOSRA Authors. All Rights Reserved.
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

#include <fstream>
#include <iterator>

#include "mosra/manifest.h"
#include "test_util.h"
#include "json.hpp"

namespace mosra {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

testing::CommandResult Cli(const std::string& args) {
  return testing::RunCommand(std::string(MOSRA_CLI_PATH) + " " + args);
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Short clips and a small source pool keep the end-to-end run quick.
constexpr const char* kSmallConfig = R"({
  "synth": {"generated_sources": 8, "generated_source_s": 0.6,
            "corpus": {"max_tail_s": 0.1, "write_components": false}},
  "train": {"batch_size": 16, "patience": 5}
})";

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::TempDir("cli"));
    std::ofstream(*dir_ / "config.json") << kSmallConfig;
    const std::string cfg = " --config " + (*dir_ / "config.json").string();
    ASSERT_EQ(Cli("synth" + cfg + " --out " + (*dir_ / "train").string() +
                  " --seed 1 --n-mos 100 --n-acoustics 100 2>/dev/null").exit_code, 0);
    ASSERT_EQ(Cli("synth" + cfg + " --out " + (*dir_ / "val").string() +
                  " --seed 2 --n-mos 30 --n-acoustics 10 2>/dev/null").exit_code, 0);
  }
  static void TearDownTestSuite() { delete dir_; }

  static std::string Train(const std::string& out, const std::string& extra) {
    const fs::path& d = *dir_;
    return "train --config " + (d / "config.json").string() + " --train " +
           (d / "train/manifest.csv").string() + " --val " + (d / "val/manifest.csv").string() +
           " --out " + (d / out).string() + " --seed 3 --quiet " + extra + " 2>/dev/null";
  }

  static fs::path* dir_;
};

fs::path* CliPipeline::dir_ = nullptr;

TEST_F(CliPipeline, SynthWritesManifest) {
  const DatasetManifest m = ReadManifest((*dir_ / "train/manifest.csv").string());
  ASSERT_EQ(m.rows.size(), 200u);
  int mos = 0;
  for (const auto& r : m.rows) {
    mos += r.role == Role::kMos;
    EXPECT_TRUE(fs::exists(m.ResolvePath(r)));
  }
  EXPECT_EQ(mos, 100);
  // Same seed, same corpus.
  const fs::path again = *dir_ / "train_again";
  ASSERT_EQ(Cli("synth --config " + (*dir_ / "config.json").string() + " --out " +
                again.string() + " --seed 1 --n-mos 3 --n-acoustics 2 2>/dev/null").exit_code,
            0);
  const DatasetManifest m2 = ReadManifest((again / "manifest.csv").string());
  EXPECT_EQ(ReadFile(m2.ResolvePath(m2.rows[0])), ReadFile(m.ResolvePath(m.rows[0])));
}

TEST_F(CliPipeline, TrainPredictEvalInspect) {
  ASSERT_EQ(Cli(Train("multi.mosra", "--epochs 3 --history " + (*dir_ / "h.csv").string()))
                .exit_code,
            0);
  std::ifstream hist(*dir_ / "h.csv");
  std::string line;
  int lines = 0;
  while (std::getline(hist, line)) ++lines;
  EXPECT_EQ(lines, 4);

  const DatasetManifest val = ReadManifest((*dir_ / "val/manifest.csv").string());
  const std::string audio = val.ResolvePath(val.rows[0]);
  const std::string predict = "predict --model " + (*dir_ / "multi.mosra").string() +
                              " --audio " + audio + " --json";
  const auto p1 = Cli(predict);
  const auto p2 = Cli(predict);
  ASSERT_EQ(p1.exit_code, 0);
  EXPECT_EQ(p1.out, p2.out);
  const json j = json::parse(p1.out);
  for (const char* key : {"mos", "mos_raw", "snr_db", "sti", "t60_s", "drr_db", "c50_db"}) {
    ASSERT_TRUE(j.contains(key)) << key;
  }
  EXPECT_GE(j["mos"].get<double>(), 1.0);
  EXPECT_LE(j["mos"].get<double>(), 5.0);

  const auto bench = Cli(predict + " --bench");
  ASSERT_EQ(bench.exit_code, 0);
  const json b = json::parse(bench.out);
  EXPECT_GT(b["bench"]["wall_ms"].get<double>(), 0.0);
  EXPECT_GE(b["bench"]["peak_extra_kib"].get<long>(), 0);

  const auto eval = Cli("eval --config " + (*dir_ / "config.json").string() + " --model " +
                        (*dir_ / "multi.mosra").string() + " --manifest " +
                        (*dir_ / "val/manifest.csv").string() + " --report " +
                        (*dir_ / "r.csv").string());
  ASSERT_EQ(eval.exit_code, 0);
  EXPECT_NE(eval.out.find("MOS  n=30"), std::string::npos) << eval.out;
  EXPECT_NE(eval.out.find("acoustics n=10"), std::string::npos) << eval.out;
  EXPECT_TRUE(fs::exists(*dir_ / "r.csv"));

  const auto inspect = Cli("inspect --model " + (*dir_ / "multi.mosra").string());
  ASSERT_EQ(inspect.exit_code, 0);
  EXPECT_NE(inspect.out.find("total trainable parameters: "), std::string::npos);
  const json ij = json::parse(Cli("inspect --json --model " + (*dir_ / "multi.mosra").string()).out);
  long long sum = 0;
  for (const auto& t : ij["tensors"]) {
    long long n = 1;
    for (int d : t["shape"]) n *= d;
    sum += n;
  }
  EXPECT_EQ(ij["param_count"].get<long long>(), sum);
}

TEST_F(CliPipeline, TrainingIsReproducibleAndMosOnlyKeepsArchitecture) {
  ASSERT_EQ(Cli(Train("a.mosra", "--epochs 1")).exit_code, 0);
  ASSERT_EQ(Cli(Train("b.mosra", "--epochs 1")).exit_code, 0);
  EXPECT_EQ(ReadFile(*dir_ / "a.mosra"), ReadFile(*dir_ / "b.mosra"));

  ASSERT_EQ(Cli(Train("mos_only.mosra", "--epochs 1 --mos-only")).exit_code, 0);
  const std::string multi = Cli("inspect --model " + (*dir_ / "a.mosra").string()).out;
  const std::string single = Cli("inspect --model " + (*dir_ / "mos_only.mosra").string()).out;
  EXPECT_FALSE(multi.empty());
  EXPECT_EQ(multi, single);
  EXPECT_NE(ReadFile(*dir_ / "a.mosra"), ReadFile(*dir_ / "mos_only.mosra"));
}

TEST(Cli, ErrorsExitWithStatusOne) {
  const auto dir = testing::TempDir("cli_errors");
  const auto missing = Cli("predict --model " + (dir / "none.mosra").string() + " --audio " +
                           (dir / "none.wav").string() + " 2>&1");
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_NE(missing.out.find("mosra: error:"), std::string::npos) << missing.out;
  std::ofstream(dir / "bad.json") << R"({"train": {"speed": 1}})";
  const auto bad = Cli("train --config " + (dir / "bad.json").string() + " 2>&1");
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.out.find("train.speed"), std::string::npos) << bad.out;
  EXPECT_NE(Cli("frobnicate 2>/dev/null").exit_code, 0);
  EXPECT_NE(Cli("2>/dev/null").exit_code, 0);
}

TEST(Cli, SpeechWritesWav) {
  const auto dir = testing::TempDir("cli_speech");
  ASSERT_EQ(Cli("speech --out " + (dir / "s.wav").string() + " --seconds 1.5 --seed 4").exit_code,
            0);
  // 44-byte header plus 16-bit mono samples at 48 kHz.
  EXPECT_EQ(fs::file_size(dir / "s.wav"), 44u + 2u * 72000u);
}

}  // namespace
}  // namespace mosra
