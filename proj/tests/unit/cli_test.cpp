#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "recnet/serialization.hpp"
#include "unit/support.hpp"

namespace recnet {
namespace {

namespace fs = std::filesystem;
using testing::fixture;

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(RECNET_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("recnet-cli-" + std::to_string(::getpid()) + "-" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string six(const std::string& out, const std::string& extra = "") const {
    return "--config " + fixture("configs/six_clients.json").string() + " --set output_dir=" + out + " " + extra;
  }

  fs::path dir_;
};

TEST_F(Cli, IngestPrintsStatistics) {
  const auto r = cli("ingest " + fixture("data/cds_sample.jsonl").string() + " --format amazon");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "users: 100\nitems: 613\ninteractions: 800\nsparsity: 98.69%\n");
}

TEST_F(Cli, SampleUsersIsDeterministic) {
  const std::string base = "ingest " + fixture("data/cds_sample.jsonl").string() + " --format amazon --sample-users 10 --seed 4";
  ASSERT_EQ(cli(base + " --out " + (dir_ / "a.jsonl").string()).code, 0);
  ASSERT_EQ(cli(base + " --out " + (dir_ / "b.jsonl").string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "a.jsonl"), slurp(dir_ / "b.jsonl"));
  EXPECT_FALSE(slurp(dir_ / "a.jsonl").empty());
}

TEST_F(Cli, BadInputLineExitsTwo) {
  const std::string cmd = std::string(RECNET_CLI_PATH) + " ingest " + fixture("data/bad_line7.jsonl").string() + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  r.code = WEXITSTATUS(::pclose(p));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 7"), std::string::npos) << r.out;
}

TEST_F(Cli, MissingCredentialExitsFour) {
  ::unsetenv("RECNET_CLI_TEST_KEY");
  const auto r = cli("run " + six(dir_.string(), "--set backend=http --set "
                                                 "'endpoint={\"base_url\":\"http://127.0.0.1:1\",\"credential_env\":"
                                                 "\"RECNET_CLI_TEST_KEY\"}'"));
  EXPECT_EQ(r.code, 4);
}

TEST_F(Cli, UnknownVariantExitsFour) {
  EXPECT_EQ(cli("run " + six(dir_.string(), "--set variant=bogus")).code, 4);
}

TEST_F(Cli, RunIsDeterministicAndReportable) {
  const auto a = dir_ / "a", b = dir_ / "b";
  const auto ra = cli("run " + six(a.string()));
  ASSERT_EQ(ra.code, 0);
  ASSERT_EQ(cli("run " + six(b.string())).code, 0);
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_EQ(slurp(a / "deliveries.jsonl"), slurp(b / "deliveries.jsonl"));
  EXPECT_TRUE(fs::exists(a / "config.resolved.json"));
  EXPECT_TRUE(fs::exists(a / "lineage.jsonl"));

  const json report = json::parse(slurp(a / "report.json"));
  EXPECT_EQ(report.at("k_trajectory").size(), report.at("batches").get<std::size_t>() + 1);
  const auto rep = cli("report --run-dir " + a.string());
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.out.find("k_trajectory:"), std::string::npos);
  const auto csv = slurp(a / "k_trajectory.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), report.at("k_trajectory").size() + 1);
}

TEST_F(Cli, ResumeContinuesFromSnapshot) {
  const auto full = dir_ / "full", part = dir_ / "part";
  ASSERT_EQ(cli("run " + six(full.string())).code, 0);
  ASSERT_EQ(cli("run " + six(part.string(), "--set snapshot_every=1")).code, 0);
  const auto first = part / "snapshots" / "batch-1.json";
  ASSERT_TRUE(fs::exists(first));
  const json snap = json::parse(slurp(first));
  ASSERT_EQ(cli("run " + six(part.string(), "--resume " + first.string())).code, 0);
  const json a = json::parse(slurp(full / "report.json")), b = json::parse(slurp(part / "report.json"));
  EXPECT_EQ(a.at("batches"), b.at("batches"));
  EXPECT_EQ(a.at("k_trajectory"), b.at("k_trajectory"));
  EXPECT_EQ(a.at("calls"), b.at("calls"));
  EXPECT_GE(json::parse(slurp(part / "snapshot.json")).at("state").at("batch_index").get<std::uint64_t>(),
            snap.at("state").at("batch_index").get<std::uint64_t>());
}

TEST_F(Cli, EvalWritesOneRowPerVariant) {
  const auto out = dir_ / "eval";
  const auto r = cli("eval " + six(out.string(), "--set repetitions=1 --set negatives=1 --variants full,no_fpo"));
  ASSERT_EQ(r.code, 0);
  const json metrics = json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(metrics.at("variants").size(), 2u);
  EXPECT_NE(r.out.find("no_fpo"), std::string::npos);
}

TEST_F(Cli, NoFpoKeepsRouterCountConstant) {
  const auto out = dir_ / "nofpo";
  ASSERT_EQ(cli("run " + six(out.string(), "--set variant=no_fpo")).code, 0);
  const json report = json::parse(slurp(out / "report.json"));
  for (const auto& k : report.at("k_trajectory")) EXPECT_EQ(k, report.at("k_trajectory")[0]);
}

TEST_F(Cli, GenSynthMatchesFixture) {
  const auto out = dir_ / "planted.jsonl";
  ASSERT_EQ(cli("gen-synth --config " + fixture("configs/planted.synth.json").string() + " --out " + out.string()).code, 0);
  EXPECT_EQ(slurp(out), slurp(fixture("data/planted.jsonl")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("run").code, 2);
  EXPECT_EQ(cli("no-such-command").code, 2);
}

}  // namespace
}  // namespace recnet
