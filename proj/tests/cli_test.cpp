#include <gtest/gtest.h>

#include "cbmbr/embedding_file.hpp"
#include "cbmbr/synth.hpp"
#include "cli_runner.hpp"

namespace cbmbr {
namespace {

using testing::run_cli;
using testing::scratch_dir;
using testing::without_timings;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch_dir("cli_test");
    const auto inst = gen_diverse(1024, 16, 3);
    write_embeddings(dir_ / "h.emb", inst.hypotheses());
    const auto src = inst.source();
    write_embeddings(dir_ / "s.emb", EmbeddingMatrix(1, src.size(), {src.begin(), src.end()}));
  }
  static std::string inputs() { return "--hyps " + (dir_ / "h.emb").string() + " --src " + (dir_ / "s.emb").string(); }
  static inline std::filesystem::path dir_;
};

TEST_F(Cli, VanillaAndMeanAgreeUnderDot) {
  const auto v = run_cli("decode " + inputs() + " --variant vanilla --utility dot");
  const auto m = run_cli("decode " + inputs() + " --variant mean --utility dot");
  ASSERT_EQ(v.exit_code, 0) << v.err;
  ASSERT_EQ(m.exit_code, 0) << m.err;
  EXPECT_EQ(nlohmann::json::parse(v.out)["selected_index"], nlohmann::json::parse(m.out)["selected_index"]);
  EXPECT_EQ(nlohmann::json::parse(v.out)["n_hypotheses"], 1024);
}

TEST_F(Cli, OversizedKIsDataError) {
  const auto r = run_cli("decode " + inputs() + " --variant cbmbr --k 2000");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "KTooLarge");
}

TEST_F(Cli, ClusteringWithOneCentroidMatchesMean) {
  const auto c = run_cli("decode " + inputs() + " --variant cbmbr --k 1 --utility mlp:2 --emit-utilities");
  const auto m = run_cli("decode " + inputs() + " --variant mean --utility mlp:2 --emit-utilities");
  ASSERT_EQ(c.exit_code, 0) << c.err;
  ASSERT_EQ(m.exit_code, 0) << m.err;
  EXPECT_EQ(nlohmann::json::parse(c.out)["expected_utilities"], nlohmann::json::parse(m.out)["expected_utilities"]);
}

TEST_F(Cli, BadFlagsExitTwo) {
  for (const std::string& args : std::vector<std::string>{"decode " + inputs() + " --variant nope", "decode " + inputs() + " --utility rbf:-1",
                                 "decode " + inputs() + " --k 0", "decode", "frobnicate",
                                 "bench --variants vanilla,oracle", "sweep-quality --scenario x.json --k 1,,2"}) {
    const auto r = run_cli(args);
    EXPECT_EQ(r.exit_code, 2) << args << "\n" << r.err;
  }
  const auto r = run_cli("decode " + inputs() + " --init sideways");
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "BadFlags");
}

TEST_F(Cli, MalformedFilesReportTheirCode) {
  std::ofstream(dir_ / "junk.emb") << "not an embedding file at all";
  const auto r = run_cli("decode --hyps " + (dir_ / "junk.emb").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "BadMagic");
  const auto missing = run_cli("decode --hyps " + (dir_ / "missing.emb").string());
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_EQ(nlohmann::json::parse(missing.err)["error"], "IoError");
}

TEST_F(Cli, IdenticalRunsIdenticalOutputBarTimings) {
  for (const char* variant : {"vanilla", "cbmbr", "cbmbr-cnt", "mean"}) {
    const std::string args = "decode " + inputs() + " --variant " + variant + " --k 32 --seed 9 --utility mlp:1 --emit-utilities";
    const auto a = run_cli(args);
    const auto b = run_cli(args + " --threads 3");
    ASSERT_EQ(a.exit_code, 0) << a.err;
    auto ja = without_timings(a.out), jb = without_timings(b.out);
    ja.erase("threads");
    jb.erase("threads");
    EXPECT_EQ(ja, jb) << variant;
    EXPECT_EQ(without_timings(run_cli(args).out), without_timings(a.out)) << variant;
  }
}

TEST_F(Cli, BenchWritesBothReports) {
  const auto out = scratch_dir("cli_bench");
  std::filesystem::remove_all(out);
  const auto r = run_cli("bench --n 200 --d 8 --variants vanilla,cbmbr,cbmbr-cnt --k-sweep 4,16 --repeats 1 --warmup 0 "
                         "--utility dot --out " + out.string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto report = nlohmann::json::parse(std::ifstream(out / "report.json"));
  EXPECT_EQ(report["records"].size(), 6u);
  EXPECT_TRUE(std::filesystem::exists(out / "report.csv"));
}

TEST_F(Cli, SweepWritesCsvs) {
  const auto out = scratch_dir("cli_sweep");
  const auto r = run_cli("sweep-quality --scenario " + std::string(CBMBR_SOURCE_DIR) +
                         "/scenarios/planted_oversampled.json --k 1,2 --num-seeds 2 --out " + out.string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("k,variant,seeds,mean_regret", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(out / "sweep.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "sweep_summary.csv"));
}

TEST_F(Cli, GenRoundTripsThroughDecode) {
  const auto h = dir_ / "gen_h.emb";
  ASSERT_EQ(run_cli("gen --n 10 --d 4 --seed 1 --out-hyps " + h.string()).exit_code, 0);
  EXPECT_EQ(read_embeddings(h), gen_diverse(10, 4, 1).hypotheses());
}

}  // namespace
}  // namespace cbmbr
