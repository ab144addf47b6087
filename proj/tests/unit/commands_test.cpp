#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "rqbench/cli/commands.hpp"
#include "rqbench/cli/tables.hpp"
#include "rqbench/csv.hpp"
#include "rqbench/process.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using namespace rqbench;
using namespace rqbench::cli;

namespace {

struct Invocation {
  int code = 0;
  std::string out, err;
};

Invocation invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Invocation r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rqbench_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string manifest(const std::string& extra_codec = "") const {
    const std::string text = R"(output_dir = "out"
metrics = ["psnr", "ssim"]

[[sequence]]
name = "Syn"
synthetic = "discs"
seed = 1
width = 64
height = 32
frames = 4

[[codec]]
id = "toyA"
builtin = "toy"

[[codec]]
id = "toyB"
builtin = "toy"
)" + extra_codec + R"(
[[group]]
name = "G"
reference = "64x32"
ladder = ["64x32", "32x16"]
qps = [10, 20, 30, 40]
)";
    const fs::path p = dir_ / "m.toml";
    write_text_file(p, text);
    return p.string();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CommandsTest, EncodeIsIdempotentAndBdOfIdenticalCodecsIsZero) {
  const std::string m = manifest();
  const Invocation first = invoke({"--manifest", m, "encode"});
  ASSERT_EQ(first.code, kExitOk) << first.err;
  const std::string csv = read_text_file(dir_ / "out/rqpoints.csv");
  ASSERT_EQ(invoke({"--manifest", m, "--jobs", "2", "encode"}).code, kExitOk);
  EXPECT_EQ(read_text_file(dir_ / "out/rqpoints.csv"), csv);
  EXPECT_EQ(read_rqpoints(dir_ / "out/rqpoints.csv").size(), 2u * 2u * 4u);

  const Invocation bd = invoke({"--manifest", m, "bd", "--input", (dir_ / "out/rqpoints.csv").string(),
                                "--anchor", "toyA"});
  ASSERT_EQ(bd.code, kExitOk) << bd.err;
  const auto rows = read_bdreport(dir_ / "out/bdreport.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].test, "toyB");
  EXPECT_NEAR(rows[0].rate.bd_rate_percent, 0.0, 1e-9);
  EXPECT_NEAR(rows[0].quality.bd_quality, 0.0, 1e-9);

  const Invocation hull = invoke({"--manifest", m, "--no-timestamp", "hull",
                                  "--input", (dir_ / "out/rqpoints.csv").string()});
  ASSERT_EQ(hull.code, kExitOk) << hull.err;
  EXPECT_TRUE(fs::exists(dir_ / "out/hull.csv"));
}

TEST_F(CommandsTest, ExitCodesByErrorKind) {
  const Invocation usage = invoke({"encode", "--bogus"});
  EXPECT_EQ(usage.code, kExitManifest);
  EXPECT_NE(usage.err.find("\"error\":\"usage\""), std::string::npos) << usage.err;

  const std::string bad = dir_.string() + "/bad.toml";
  write_text_file(bad, "[[codec]]\nid = \"x\"\nbuiltin = \"toy\"\nqp_min = 40\nqp_max = 20\n");
  const Invocation manifest_err = invoke({"--manifest", bad, "encode"});
  EXPECT_EQ(manifest_err.code, kExitManifest);
  EXPECT_NE(manifest_err.err.find("\"field\":\"codec[0].qp_"), std::string::npos) << manifest_err.err;

  const std::string failing = R"(
[[codec]]
id = "broken"
encode = "echo no encoder here {input} {bitstream} {recon} {qp}; exit 7"
qp_min = 0
qp_max = 51
)";
  const Invocation process = invoke({"--manifest", manifest(failing), "encode", "--codec", "broken"});
  EXPECT_EQ(process.code, kExitProcess) << process.err;
  EXPECT_NE(process.err.find("no encoder here"), std::string::npos) << process.err;

  const Invocation data = invoke({"bd", "--input", (dir_ / "missing.csv").string(), "--anchor", "a"});
  EXPECT_EQ(data.code, kExitData);
  EXPECT_NE(data.err.find("\"error\":\"io\""), std::string::npos);
}

TEST_F(CommandsTest, SubjectivePipeline) {
  // Three codecs, twelve subjects; C is 15 points worse everywhere.
  std::mt19937_64 rng(3);
  std::string scores = csv_row(kScoresHeader);
  std::string rq = csv_row(kRqPointsHeader);
  for (const char* codec : {"A", "B", "C"}) {
    for (int r = 1; r <= 4; ++r) {
      const double truth = 60 - 10 * r + (std::string(codec) == "C" ? -15 : 0);
      for (int s = 0; s < 12; ++s) {
        const double dist = std::clamp(truth + 3 * fixture::normal(rng), 0.0, 100.0);
        scores += csv_row({"A", fmt::format("s{:02}", s), "S1", codec, fmt::format("R{}", r), "90",
                           fmt::format("{:.3f}", dist)});
      }
      rq += csv_row({"S1", codec, "HD", "64", "32", "64", "32", fmt::format("R{}", r), "", "100", "30",
                     fmt::format("{:.3f}", truth / 2 + 20), "", "", "", "", ""});
    }
  }
  write_text_file(dir_ / "scores.csv", scores);
  write_text_file(dir_ / "rq.csv", rq);
  const std::string out = (dir_ / "res").string();

  const Invocation dmos = invoke({"-o", out, "dmos", "--scores", (dir_ / "scores.csv").string()});
  ASSERT_EQ(dmos.code, kExitOk) << dmos.err;
  const auto records = read_dmos(dir_ / "res/dmos.csv");
  ASSERT_EQ(records.size(), 12u);
  EXPECT_TRUE(fs::exists(dir_ / "res/screening.csv"));

  const Invocation anova = invoke({"-o", out, "anova", "--scores", (dir_ / "scores.csv").string()});
  ASSERT_EQ(anova.code, kExitOk) << anova.err;
  const CsvTable sig = read_csv_file(dir_ / "res/significance.csv");
  ASSERT_EQ(sig.rows.size(), 6u);
  // A vs C: every point significant, A better.
  EXPECT_EQ(sig.rows[1][0], "A");
  EXPECT_EQ(sig.rows[1][1], "C");
  EXPECT_EQ(sig.rows[1].back(), "4/4, (4/0)");

  const Invocation corr = invoke({"-o", out, "--group", "HD", "--metric", "psnr", "correlate", "--rqpoints",
                                  (dir_ / "rq.csv").string(), "--dmos", (dir_ / "res/dmos.csv").string(),
                                  "--permutations", "200"});
  ASSERT_EQ(corr.code, kExitOk) << corr.err;
  const CsvTable c = read_csv_file(dir_ / "res/correlation.csv");
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_GT(parse_number(c.rows[0][2], "srocc"), 0.9);
}

TEST_F(CommandsTest, SitiReadsConventionallyNamedFiles) {
  std::mt19937_64 rng(4);
  const auto seq = fixture::random_sequence(rng, {32, 16}, 8, 3);
  const fs::path raw = dir_ / "Noise_32x16_30fps_8bit.yuv";
  write_raw_video(seq, raw);
  const Invocation r = invoke({"-o", dir_.string(), "siti", "--input", raw.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const CsvTable t = read_csv_file(dir_ / "siti.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "Noise");
}

TEST(CliBinary, HelpAndBadSubcommand) {
  const char* cli = std::getenv("RQBENCH_CLI");
  if (!cli) GTEST_SKIP() << "RQBENCH_CLI not set";
  const CommandResult help = run_command(shell_quote(cli) + " --help");
  EXPECT_EQ(help.exit_code, 0);
  EXPECT_NE(help.output.find("correlate"), std::string::npos);
  EXPECT_EQ(run_command(shell_quote(cli) + " frobnicate").exit_code, kExitManifest);
}
