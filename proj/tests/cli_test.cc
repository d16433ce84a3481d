#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dain/tensor.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dain {
namespace {

using ::testing::HasSubstr;
using ::testing::MatchesRegex;
using testing::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the dain binary with `args`, capturing stdout and stderr.
RunResult RunCli(const std::string& args, const TempDir& dir) {
  const auto err_path = dir / "stderr.txt";
  const std::string command =
      std::string(DAIN_CLI_PATH) + " " + args + " 2> '" + err_path.string() + "'";
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) result.out += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream err(err_path);
  std::stringstream ss;
  ss << err.rdbuf();
  result.err = ss.str();
  return result;
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t DataLines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty() && line[0] != '#';
  return n;
}

std::string Quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

TEST(CliTest, SynthWritesParsableTensor) {
  TempDir dir("cli_synth");
  const auto out = dir / "t.txt";
  const auto r =
      RunCli("synth --dims 30,30,30 --nnz 1350 --rank 5 --seed 11 --out " + Quote(out), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(DataLines(out), 1350u);
  const SparseTensor t = load_tensor(out, 3);
  EXPECT_EQ(t.cells.size(), 1350u);
  EXPECT_EQ(t.dims, (Dims{30, 30, 30}));
  EXPECT_NO_THROW(validate(t));
}

TEST(CliTest, SplitWritesThreeFiles) {
  TempDir dir("cli_split");
  ASSERT_EQ(RunCli("synth --dims 10,10,10 --nnz 200 --seed 3 --out " + Quote(dir / "t.txt"), dir)
                .exit_code,
            0);
  const auto r = RunCli(
      "split --input " + Quote(dir / "t.txt") + " --seed 4 --out " + Quote(dir / "split"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(DataLines(dir / "split" / "train.txt"), 144u);
  EXPECT_EQ(DataLines(dir / "split" / "val.txt"), 36u);
  EXPECT_EQ(DataLines(dir / "split" / "test.txt"), 20u);
}

TEST(CliTest, ControlOnlyPipelineReport) {
  TempDir dir("cli_pipeline");
  ASSERT_EQ(RunCli("synth --dims 8,9,10 --nnz 300 --seed 5 --out " + Quote(dir / "t.txt"), dir)
                .exit_code,
            0);
  {
    std::ofstream cfg(dir / "cfg.txt");
    cfg << "ratios = 0\nrepeats = 2\ndownstream.max_epochs = 3\ndownstream.patience = 3\n"
           "train.max_epochs = 3\ntrain.patience = 3\n";
  }
  const auto r = RunCli("pipeline --config " + Quote(dir / "cfg.txt") + " --input " +
                            Quote(dir / "t.txt") + " --seed 5 --out " + Quote(dir / "report"),
                        dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::ifstream results(dir / "report" / "results.csv");
  std::string line;
  std::getline(results, line);
  std::size_t rows = 0;
  while (std::getline(results, line)) {
    ++rows;
    EXPECT_THAT(line, HasSubstr(",0,")) << line;
  }
  EXPECT_EQ(rows, 10u);  // 5 methods x 2 seeds, all controls
}

class CliStagesTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(RunCli("synth --dims 10,10,10 --nnz 300 --seed 2 --out " + Quote(dir_ / "t.txt"),
                     dir_)
                  .exit_code,
              0);
    ASSERT_EQ(
        RunCli("split --input " + Quote(dir_ / "t.txt") + " --seed 2 --out " + Quote(split()), dir_)
            .exit_code,
        0);
  }

  std::filesystem::path split() const { return dir_ / "split"; }
  std::string Fast() const { return " --epochs 4 --layers 8 --embedding-len 4 --batch-size 64"; }

  TempDir dir_{"cli_stages"};
};

TEST_F(CliStagesTest, FullStageChainAndDeterministicAugment) {
  const std::string s = " --split-dir " + Quote(split());
  auto r = RunCli("train" + s + Fast() + " --seed 9 --out " + Quote(dir_ / "model.txt") +
                      " --checkpoints-out " + Quote(dir_ / "ckpt.txt"),
                  dir_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_THAT(r.out, HasSubstr("best_epoch"));

  r = RunCli("influence" + s + " --checkpoints " + Quote(dir_ / "ckpt.txt") + " --out " +
                 Quote(dir_ / "cit.csv") + " --threads 2",
             dir_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(DataLines(dir_ / "cit.csv"), 217u);  // header plus 216 training cells

  r = RunCli("entity" + s + " --cit " + Quote(dir_ / "cit.csv") + " --out " +
                 Quote(dir_ / "entity_"),
             dir_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (int n = 0; n < 3; ++n) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / ("entity_" + std::to_string(n) + ".csv")));
  }

  const std::string augment = "augment" + s + Fast() +
                              " --method dain --ratio 0.5 --seed 13 --entity-prefix " +
                              Quote(dir_ / "entity_") + " --out ";
  ASSERT_EQ(RunCli(augment + Quote(dir_ / "a1.txt"), dir_).exit_code, 0);
  ASSERT_EQ(RunCli(augment + Quote(dir_ / "a2.txt"), dir_).exit_code, 0);
  const std::string first = Slurp(dir_ / "a1.txt");
  EXPECT_EQ(DataLines(dir_ / "a1.txt"), 108u);
  EXPECT_THAT(first, HasSubstr("# provenance: dain"));
  EXPECT_EQ(first, Slurp(dir_ / "a2.txt"));
}

TEST_F(CliStagesTest, BaselineAugmenters) {
  const std::string s = " --split-dir " + Quote(split());
  for (const char* method : {"duplication", "entity_replacement", "random_mlp"}) {
    const auto r = RunCli("augment" + s + Fast() + " --method " + method +
                              " --ratio 0.2 --clamp --out " + Quote(dir_ / "aug.txt"),
                          dir_);
    ASSERT_EQ(r.exit_code, 0) << method << ": " << r.err;
    EXPECT_EQ(DataLines(dir_ / "aug.txt"), 43u) << method;
  }
}

TEST(CliErrorTest, MissingFileIsSingleLineError) {
  TempDir dir("cli_err");
  const auto r = RunCli("split --input /nonexistent/t.txt --out " + Quote(dir / "s"), dir);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_THAT(r.err, MatchesRegex("error: [a-z]+: [^\n]*\n"));
}

TEST(CliErrorTest, UnknownFlagIsUsageError) {
  TempDir dir("cli_err");
  const auto r = RunCli("synth --dims 3,3 --nnz 2 --bogus 1 --out x.txt", dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_THAT(r.err, MatchesRegex("error: usage: [^\n]*\n"));
}

TEST(CliErrorTest, ModuleErrorCarriesCategory) {
  TempDir dir("cli_err");
  const auto r = RunCli("synth --dims 3,3 --nnz 10 --seed 1 --out " + Quote(dir / "t.txt"), dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_THAT(r.err, MatchesRegex("error: capacity: [^\n]*\n"));
}

TEST(CliErrorTest, ParseErrorCarriesCategory) {
  TempDir dir("cli_err");
  {
    std::ofstream bad(dir / "bad.txt");
    bad << "0 0 1.0\n1 x 2.0\n";
  }
  const auto r = RunCli("split --input " + Quote(dir / "bad.txt") + " --out " + Quote(dir / "s"),
                        dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_THAT(r.err, MatchesRegex("error: parse: [^\n]*\n"));
}

TEST(CliHelpTest, ListsBothPresets) {
  TempDir dir("cli_help");
  const auto r = RunCli("--help", dir);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_THAT(r.out, HasSubstr("full: R=50, layers 1024,1024,128, batch 1024"));
  EXPECT_THAT(r.out, HasSubstr("desk: R=16, layers 64,32, batch 256"));
  EXPECT_THAT(r.out, HasSubstr("zero-based"));
}

}  // namespace
}  // namespace dain
