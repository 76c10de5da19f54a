#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "recnet/config.hpp"
#include "recnet/error.hpp"
#include "recnet/pipeline.hpp"
#include "unit/support.hpp"

namespace recnet {
namespace {

namespace fs = std::filesystem;
using testing::fixture;

std::optional<ErrorCode> code_of(const json& j) {
  try {
    parse_run_config(j, "/base");
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

TEST(RunConfig, Defaults) {
  const auto c = parse_run_config({{"dataset", "d.jsonl"}}, "/base");
  EXPECT_EQ(c.dataset, fs::path("/base/d.jsonl"));
  EXPECT_EQ(c.repetitions, 3u);
  EXPECT_EQ(c.negatives, 9u);
  EXPECT_EQ(c.network.backend, BackendKind::Mock);
  EXPECT_EQ(c.eval_variants(), std::vector<Variant>{Variant::Full});
}

TEST(RunConfig, UnknownKeysRejected) {
  EXPECT_EQ(code_of({{"dataset", "d"}, {"tau_typo", 0.3}}), ErrorCode::ConfigError);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"endpoint", {{"url", "x"}}}}), ErrorCode::ConfigError);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"embedding", {{"kind", "hash"}, {"dim", 3}}}}), ErrorCode::ConfigError);
}

TEST(RunConfig, InvalidValues) {
  EXPECT_EQ(code_of(json::object()), ErrorCode::ConfigError);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"synthetic", json::object()}}), ErrorCode::ConfigError);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"repetitions", 0}}), ErrorCode::ConfigError);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"backend", "http"}}), ErrorCode::ConfigError);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"embedding", {{"kind", "remote"}}}}), ErrorCode::ConfigError);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"variant", "nope"}}), ErrorCode::UnknownVariant);
  EXPECT_EQ(code_of({{"dataset", "d"}, {"tau", "high"}}), ErrorCode::ConfigError);
}

TEST(RunConfig, ResolvedFormParsesBack) {
  for (const char* name : {"configs/six_clients.json", "configs/planted.json", "configs/cds.json"}) {
    const auto c = load_run_config(fixture(name));
    const json resolved = resolved_config(c);
    const auto back = parse_run_config(resolved, {});
    EXPECT_EQ(resolved_config(back), resolved) << name;
    EXPECT_TRUE(c.dataset->is_absolute());
  }
}

TEST(RunConfig, RelativePathsFollowTheFile) {
  const auto c = load_run_config(fixture("configs/six_clients.json"));
  EXPECT_EQ(*c.dataset, fixture("data/six_clients.jsonl").lexically_normal());
  EXPECT_TRUE(fs::exists(*c.dataset));
}

TEST(RunConfig, MissingFile) {
  try {
    load_run_config("/nonexistent/config.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Pipeline, HttpBackendWithoutCredentialFailsEarly) {
  auto c = parse_run_config({{"dataset", "d"},
                             {"backend", "http"},
                             {"endpoint", {{"base_url", "http://127.0.0.1:1"}, {"credential_env", "RECNET_TEST_UNSET_KEY"}}}},
                            "/base");
  ::unsetenv("RECNET_TEST_UNSET_KEY");
  try {
    make_backend(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Pipeline, LoadDatasetAppliesSampling) {
  auto c = load_run_config(fixture("configs/cds.json"));
  c.five_core = false;
  c.sample_users = 7;
  c.max_history = 2;
  const auto s = stats(load_dataset(c));
  EXPECT_EQ(s.users, 7u);
  EXPECT_EQ(s.interactions, 14u);
}

class GoldenCopy : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("recnet-golden-" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_ / "goldens");
    fs::create_directories(root_ / "configs");
    fs::copy_file(fixture("goldens/six_clients.json"), root_ / "goldens/six_clients.json");
    json cfg = json::parse(std::ifstream(fixture("configs/six_clients.json")));
    cfg["dataset"] = fixture("data/six_clients.jsonl").string();
    std::ofstream(root_ / "configs/six_clients.json") << cfg.dump(2);
    std::ofstream(root_ / "goldens/manifest.json")
        << R"({"fixtures":[{"name":"six","config":"../configs/six_clients.json","golden":"six_clients.json"},)"
        << R"({"name":"absent","config":"../configs/six_clients.json","golden":"absent.json"}]})";
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path root_;
};

TEST_F(GoldenCopy, PassUnverifiedMismatchAndUpdate) {
  const auto manifest = root_ / "goldens/manifest.json";
  auto r = verify_goldens(manifest);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].status, GoldenStatus::Pass) << r[0].detail;
  EXPECT_EQ(r[1].status, GoldenStatus::Unverified);

  json doc = json::parse(std::ifstream(root_ / "goldens/six_clients.json"));
  doc["report"]["batches"] = 999;
  std::ofstream(root_ / "goldens/six_clients.json") << doc.dump(2) << "\n";
  r = verify_goldens(manifest);
  EXPECT_EQ(r[0].status, GoldenStatus::Mismatch);
  EXPECT_NE(r[0].detail.find("/report/batches"), std::string::npos);

  r = verify_goldens(manifest, true);
  EXPECT_EQ(r[0].status, GoldenStatus::Pass);
  EXPECT_TRUE(fs::exists(root_ / "goldens/absent.json"));
  r = verify_goldens(manifest);
  EXPECT_EQ(r[0].status, GoldenStatus::Pass);
  EXPECT_EQ(r[1].status, GoldenStatus::Pass);
}

TEST(Goldens, BrokenConfigIsAnError) {
  const auto dir = fs::temp_directory_path() / ("recnet-golden-err-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "manifest.json") << R"({"fixtures":[{"name":"x","config":"missing.json","golden":"x.json"}]})";
  const auto r = verify_goldens(dir / "manifest.json");
  EXPECT_EQ(r[0].status, GoldenStatus::Error);
  fs::remove_all(dir);
  EXPECT_THROW(verify_goldens(dir / "manifest.json"), Error);
}

}  // namespace
}  // namespace recnet
