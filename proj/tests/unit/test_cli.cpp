#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "avt/metrics.hpp"
#include "avt/optim.hpp"
#include "avt/predictions.hpp"
#include "avt/text_io.hpp"

using namespace avt;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result avt_cli(const std::string& args) {
  Result r;
  const std::string cmd = std::string("'") + AVT_CLI_PATH + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("avt_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return "'" + (dir / name).string() + "'"; }
  Result gen(const std::string& name, const std::string& extra = "") {
    return avt_cli("gen --seed 3 --train-videos 6 --val-videos 3 --video-len 40 --out " + p(name) + " " + extra);
  }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, GenIsReproducibleAndRefusesNonEmptyOutput) {
  ASSERT_EQ(gen("a").code, 0);
  ASSERT_EQ(gen("b").code, 0);
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir / "a");
    if (rel == "gen_config.txt") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / rel)) << rel;
  }
  auto again = gen("a");
  EXPECT_EQ(again.code, 2);
  EXPECT_NE(again.out.find("--force"), std::string::npos);
  EXPECT_EQ(gen("a", "--force").code, 0);
  EXPECT_TRUE(fs::exists(dir / "a" / "gen_config.txt"));
}

TEST_F(Cli, StatCountsMatchChainLengths) {
  ASSERT_EQ(gen("d").code, 0);
  auto r = avt_cli("stat --data " + p("d"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = parse_csv(slurp(dir / "d" / "segments.csv"));
  const std::string expect = "segments " + std::to_string(rows.size() - 1) + "\nchain length total " +
                             std::to_string(rows.size() - 1);
  EXPECT_NE(r.out.find(expect), std::string::npos) << r.out;
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream cfg(dir / "gen.cfg");
    cfg << "# small world\nseed = 9\nvideo_len = 30\ntrain_videos = 2\nval_videos = 1\n";
  }
  ASSERT_EQ(avt_cli("gen -c " + p("gen.cfg") + " --video-len 25 --out " + p("d")).code, 0);
  const auto snap = KeyValueConfig::parse(slurp(dir / "d" / "gen_config.txt"));
  EXPECT_EQ(snap.require("seed"), "9");
  EXPECT_EQ(snap.require("video_len"), "25");
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "sigmaa = 0.1\n";
  }
  auto r = avt_cli("gen -c " + p("bad.cfg") + " --out " + p("e"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("sigmaa"), std::string::npos);
}

TEST_F(Cli, OutputRootFromEnvironment) {
  const std::string cmd = "AVT_OUTPUT_ROOT=" + p("root") + " '" + AVT_CLI_PATH +
                          "' gen --train-videos 1 --val-videos 0 --video-len 20 --out rel > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "root" / "rel" / "manifest.txt"));
}

TEST_F(Cli, NaiveLogAndLrColumn) {
  ASSERT_EQ(gen("d").code, 0);
  auto r = avt_cli("train --data " + p("d") + " --mode naive --epochs 3 --warmup 1 --lr 0.05 --batch-size 8 --out " + p("r"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = parse_csv(slurp(dir / "r" / "train_log.csv"));
  ASSERT_GT(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"epoch", "step", "l_next", "l_cls", "l_feat", "total", "lr"}));
  const LrSchedule sched{3, 1, 0.05};
  int last_epoch = -1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][5], rows[i][2]) << "row " << i;
    const int epoch = parse_int(rows[i][0]);
    if (epoch != last_epoch) EXPECT_EQ(parse_double(rows[i][6]), lr_at_epoch(epoch, sched)) << "row " << i;
    last_epoch = epoch;
  }
  EXPECT_EQ(last_epoch, 2);
  EXPECT_TRUE(fs::exists(dir / "r" / "best.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "r" / "train_config.txt"));
}

TEST_F(Cli, ResumeContinuesLikeUninterruptedRun) {
  ASSERT_EQ(gen("d").code, 0);
  const std::string common = "train --data " + p("d") + " --epochs 4 --warmup 1 --lr 0.05 --seed 2 --batch-size 8 ";
  ASSERT_EQ(avt_cli(common + "--out " + p("full")).code, 0);
  ASSERT_EQ(avt_cli(common + "--stop-after 2 --out " + p("part")).code, 0);
  auto r = avt_cli(common + "--resume --out " + p("part"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(dir / "part" / "train_log.csv"), slurp(dir / "full" / "train_log.csv"));
  for (const char* run : {"full", "part"})
    ASSERT_EQ(avt_cli("eval --split all --checkpoint " + p(std::string(run) + "/last.ckpt") + " --data " + p("d") +
                      " --out " + p(std::string("eval_") + run)).code, 0);
  EXPECT_EQ(slurp(dir / "eval_part" / "predictions.csv"), slurp(dir / "eval_full" / "predictions.csv"));
}

TEST_F(Cli, EvalFuseAndRollout) {
  ASSERT_EQ(gen("d").code, 0);
  ASSERT_EQ(avt_cli("train --data " + p("d") + " --epochs 2 --warmup 1 --lr 0.05 --out " + p("r")).code, 0);
  ASSERT_EQ(avt_cli("eval --checkpoint " + p("r/last.ckpt") + " --data " + p("d") + " --out " + p("e1")).code, 0);
  ASSERT_EQ(avt_cli("eval --checkpoint " + p("r/last.ckpt") + " --data " + p("d") + " --out " + p("e2")).code, 0);
  EXPECT_EQ(slurp(dir / "e1" / "report.csv"), slurp(dir / "e2" / "report.csv"));
  EXPECT_EQ(slurp(dir / "e1" / "predictions.csv"), slurp(dir / "e2" / "predictions.csv"));

  auto f = avt_cli("fuse --pred " + p("e1/predictions.csv") + " --pred " + p("e2/predictions.csv") + " --vocab " + p("d") +
                   " --out " + p("f"));
  ASSERT_EQ(f.code, 0) << f.out;
  EXPECT_EQ(slurp(dir / "f" / "report.csv"), slurp(dir / "e1" / "report.csv"));

  const auto preds = load_predictions(dir / "e1" / "predictions.csv");
  auto oracle = preds;
  for (auto& rec : oracle) {
    std::fill(rec.probs.begin(), rec.probs.end(), 0.0);
    rec.probs[static_cast<std::size_t>(rec.true_action)] = 1.0;
  }
  save_predictions(dir / "oracle.csv", oracle);
  ASSERT_EQ(avt_cli("fuse --pred " + p("oracle.csv") + " --pred " + p("oracle.csv") + " --vocab " + p("d") + " --out " + p("o")).code, 0);
  const auto report = parse_csv(slurp(dir / "o" / "report.csv"));
  std::size_t overall = 0;
  for (const auto& row : report)
    if (row.size() > 4 && row[2] == "overall") {
      ++overall;
      for (std::size_t c = row.size() - 3; c < row.size(); ++c) EXPECT_EQ(parse_double(row[c]), 1.0) << row[1];
    }
  EXPECT_EQ(overall, 3u);

  const auto& first = preds.front();
  auto roll = avt_cli("rollout --checkpoint " + p("r/last.ckpt") + " --data " + p("d") + " --steps 1 --sample-id " +
                      std::to_string(first.sample_id) + " --out " + p("ro"));
  ASSERT_EQ(roll.code, 0) << roll.out;
  const auto trace = parse_csv(slurp(dir / "ro" / "rollout.csv"));
  ASSERT_EQ(trace.size(), 2u);
  EXPECT_EQ(parse_int(trace[1][1]), argmax(first.probs));
}

TEST_F(Cli, FrameModelAttentionExports) {
  ASSERT_EQ(avt_cli("gen --frames true --seed 4 --train-videos 2 --val-videos 1 --video-len 16 --out " + p("d")).code, 0);
  auto t = avt_cli("train --data " + p("d") + " --preset avt-tiny --observe 4 --epochs 1 --warmup 0 --lr 0.01 --out " + p("r"));
  ASSERT_EQ(t.code, 0) << t.out;
  auto a = avt_cli("attn --checkpoint " + p("r/last.ckpt") + " --data " + p("d") + " --sample-id 3 --out " + p("a"));
  ASSERT_EQ(a.code, 0) << a.out;
  const auto heat = parse_csv(slurp(dir / "a" / "spatial_00.csv"));
  ASSERT_EQ(heat.size(), 4u);
  EXPECT_EQ(heat[0].size(), 4u);
  const auto pgm = slurp(dir / "a" / "spatial_00.pgm");
  EXPECT_EQ(pgm.substr(0, 11), "P5\n4 4\n255\n");
  const auto last = parse_csv(slurp(dir / "a" / "temporal_last.csv"));
  ASSERT_EQ(last.size(), 1u);
  ASSERT_EQ(last[0].size(), 4u);
  double s = 0;
  for (const auto& v : last[0]) s += parse_double(v);
  EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(avt_cli("").code, 2);
  EXPECT_EQ(avt_cli("train --data " + p("missing")).code, 2);
  EXPECT_EQ(avt_cli("gen --sigma abc --out " + p("x")).code, 2);
  ASSERT_EQ(gen("d").code, 0);
  ASSERT_EQ(avt_cli("train --data " + p("d") + " --epochs 1 --warmup 0 --lr 0.05 --out " + p("r")).code, 0);
  auto nan = avt_cli("train --data " + p("d") + " --epochs 2 --warmup 0 --lr 1e300 --out " + p("n"));
  EXPECT_EQ(nan.code, 4) << nan.out;
  auto attn = avt_cli("attn --spatial true --checkpoint " + p("r/last.ckpt") + " --data " + p("d") + " --sample-id 5 --out " + p("a"));
  EXPECT_EQ(attn.code, 2);
  EXPECT_NE(attn.out.find("fixed features"), std::string::npos);
}
