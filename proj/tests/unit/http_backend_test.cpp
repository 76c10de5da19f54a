#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "recnet/error.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/serialization.hpp"
#include "unit/support.hpp"

namespace recnet {
namespace {

using testing::attrs;
using testing::FakeTransport;
using testing::no_sleep;

HttpResponse chat(const std::string& content) {
  return {200, json{{"choices", json::array({json{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump(),
          {}};
}

struct Harness {
  std::vector<FakeTransport::Request> log;
  std::unique_ptr<HttpPromptBackend> backend;

  explicit Harness(std::deque<HttpResponse> replies, ChatBackendConfig cfg = {}) {
    auto t = std::make_unique<FakeTransport>();
    t->log = &log;
    t->replies = std::move(replies);
    backend = std::make_unique<HttpPromptBackend>(std::move(cfg), std::move(t), no_sleep());
  }

  std::string prompt(std::size_t i) const {
    return json::parse(log.at(i).body).at("messages").at(0).at("content").get<std::string>();
  }
};

CandidateView cand(const char* id, const char* profile) { return {ClientId::item(id), profile}; }

TEST(RenderTemplate, SubstitutesKnownPlaceholders) {
  EXPECT_EQ(render_template("{{a}} and {{b}} and {{c}}", {{"a", "x"}, {"b", "{{a}}"}}), "x and {{a}} and {{c}}");
  EXPECT_EQ(render_template("no close {{a", {{"a", "x"}}), "no close {{a");
}

TEST(BuiltinTemplates, EveryKindHasOne) {
  for (PromptKind k : kAllPromptKinds) EXPECT_FALSE(builtin_template(k).empty()) << to_string(k);
}

TEST(HttpBackend, MissingCredentialFailsAtConstruction) {
  ::unsetenv("RECNET_TEST_CHAT_KEY");
  ChatBackendConfig cfg;
  cfg.endpoint.credential_env = "RECNET_TEST_CHAT_KEY";
  try {
    Harness h({}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(HttpBackend, RequestShape) {
  ::setenv("RECNET_TEST_CHAT_KEY", "secret", 1);
  ChatBackendConfig cfg;
  cfg.endpoint.credential_env = "RECNET_TEST_CHAT_KEY";
  cfg.endpoint.model = "m1";
  cfg.temperature = 0.25;
  Harness h({chat("jazz, vinyl\n- saxophone")}, cfg);
  EXPECT_EQ(h.backend->extract("I like jazz"), attrs({"jazz", "vinyl", "saxophone"}));
  ASSERT_EQ(h.log.size(), 1u);
  EXPECT_EQ(h.log[0].path, "/v1/chat/completions");
  const json body = json::parse(h.log[0].body);
  EXPECT_EQ(body.at("model"), "m1");
  EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.25);
  EXPECT_NE(h.prompt(0).find("I like jazz"), std::string::npos);
  EXPECT_EQ(h.prompt(0).rfind("#", 0), std::string::npos);
  EXPECT_EQ(h.backend->http_calls(), 1u);
  EXPECT_EQ(h.backend->counter().get(PromptKind::Extract), 1u);
  ::unsetenv("RECNET_TEST_CHAT_KEY");
}

TEST(HttpBackend, MalformedCompletionPayload) {
  Harness h({{200, "{\"choices\":[]}", {}}});
  try {
    h.backend->summarize("p", attrs({"x"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
  }
}

TEST(HttpBackend, PredictParsesLabel) {
  Harness h({chat("Item B"), chat("I cannot decide")});
  EXPECT_EQ(h.backend->predict("u", cand("x", "p"), cand("y", "q")).chosen, ClientId::item("y"));
  const auto bad = h.backend->predict("u", cand("x", "p"), cand("y", "q"));
  EXPECT_FALSE(bad.parsed);
  EXPECT_EQ(h.backend->drain_warnings().size(), 1u);
}

TEST(HttpBackend, GradientSections) {
  Harness h({chat("REWARD: wrong pick\nGRADIENT:\nadd:jazz\nrule:deny:metal"), chat("add:vinyl")});
  InteractionContext ctx;
  const auto g = h.backend->gradient({ModuleRef::profile_of(ClientId::user("u")), "rock", {}, ctx});
  EXPECT_EQ(g.reward_text, "wrong pick");
  EXPECT_EQ(g.gradient_text, "add:jazz\nrule:deny:metal");
  const auto loose = h.backend->gradient({ModuleRef::profile_of(ClientId::user("u")), "rock", {}, ctx});
  EXPECT_EQ(loose.gradient_text, "add:vinyl");
}

TEST(HttpBackend, FilterOptimizerFallsBackToDirectives) {
  Harness h({chat("- deny: metal\nallow:jazz"), chat("sure thing")});
  const auto f = h.backend->optimize_filter(FilterMemory{}, "rule:deny:metal");
  ASSERT_EQ(f.rules.size(), 2u);
  EXPECT_TRUE(f.denies(Attribute::parse("metal")));
  const auto g = h.backend->optimize_filter(FilterMemory{}, "rule:deny:polka");
  ASSERT_EQ(g.rules.size(), 1u);
  EXPECT_TRUE(g.denies(Attribute::parse("polka")));
}

TEST(HttpBackend, RankRetriesThenFallsBack) {
  const std::vector<CandidateView> cands{cand("a", "rock"), cand("b", "jazz")};
  Harness ok({chat("B\nA")});
  EXPECT_EQ(ok.backend->rank("jazz", cands), (std::vector<ClientId>{ClientId::item("b"), ClientId::item("a")}));
  Harness bad({chat("B"), chat("B\nB")});
  EXPECT_EQ(bad.backend->rank("jazz", cands), mock_rank("jazz", cands, 32));
  EXPECT_EQ(bad.log.size(), 2u);
}

TEST(HttpBackend, UnknownMergeTargetIsNoop) {
  FeatureHashEmbedder e(32, 1);
  std::vector<RouterAgent> routers{testing::make_router(1, attrs({"jazz"}), e)};
  AggregatedGradient agg;
  Harness h({chat("merge:9")});
  EXPECT_EQ(h.backend->decide_router({routers[0], agg, routers}).action, RouterDecision::Action::NoOp);
}

TEST(HttpBackend, TemplateDirectoryOverrides) {
  const auto dir = std::filesystem::temp_directory_path() / "recnet_tmpl_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "summarize.txt") << "# header\nSUM {{router_profile}} + {{new_attributes}}";
  ChatBackendConfig cfg;
  cfg.template_dir = dir;
  Harness h({chat("community interests: jazz")}, cfg);
  h.backend->summarize("old", attrs({"jazz"}));
  EXPECT_EQ(h.prompt(0), "SUM old + jazz\n");
  std::filesystem::remove_all(dir);
}

TEST(ReplyParsers, Predict) {
  const auto a = cand("i1", ""), b = cand("i2", "");
  EXPECT_EQ(parse_predict_reply("Item A\nbecause jazz", a, b), ClientId::item("i1"));
  EXPECT_EQ(parse_predict_reply("b", a, b), ClientId::item("i2"));
  EXPECT_EQ(parse_predict_reply("I pick i2.", a, b), ClientId::item("i2"));
  EXPECT_FALSE(parse_predict_reply("Item A or Item B", a, b).has_value());
}

TEST(ReplyParsers, Decision) {
  EXPECT_EQ(parse_decision_reply("split")->action, RouterDecision::Action::Split);
  EXPECT_EQ(parse_decision_reply("Decision: merge:4")->merge_target, 4u);
  const auto rw = parse_decision_reply("rewrite\nPROFILE: community interests: jazz");
  EXPECT_EQ(rw->payload, std::optional<std::string>("community interests: jazz"));
  EXPECT_EQ(parse_decision_reply("noop")->action, RouterDecision::Action::NoOp);
  EXPECT_FALSE(parse_decision_reply("merge:abc").has_value());
  EXPECT_FALSE(parse_decision_reply("explode").has_value());
}

TEST(ReplyParsers, RankingMustBePermutation) {
  const std::vector<CandidateView> c{cand("x1", ""), cand("x2", ""), cand("x3", "")};
  EXPECT_EQ(parse_ranking_reply("1. C\n2. A\n3. B", c),
            (std::vector<ClientId>{ClientId::item("x3"), ClientId::item("x1"), ClientId::item("x2")}));
  EXPECT_TRUE(parse_ranking_reply("x2\nx1\nx3", c).has_value());
  EXPECT_FALSE(parse_ranking_reply("A\nB", c).has_value());
  EXPECT_FALSE(parse_ranking_reply("A\nA\nB", c).has_value());
}

}  // namespace
}  // namespace recnet
