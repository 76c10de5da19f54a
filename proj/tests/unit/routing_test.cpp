#include <gtest/gtest.h>

#include <cmath>

#include "recnet/error.hpp"
#include "recnet/random.hpp"
#include "recnet/routing.hpp"
#include "unit/support.hpp"

namespace recnet {
namespace {

using testing::attrs;
using testing::make_client;
using testing::make_router;

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a.values[i] * b.values[i];
  return s;
}

// Embeddings are unit or zero, so the dot product is the cosine.
RouterId brute_force_route(const Attribute& a, const std::vector<RouterAgent>& routers, const EmbeddingBackend& e) {
  const auto v = e.embed(a.text());
  RouterId best = 0;
  double best_sim = 0;
  for (const auto& r : routers) {
    const double s = dot(v, r.embedding);
    if (best == 0 || s > best_sim + 1e-12 || (std::abs(s - best_sim) <= 1e-12 && r.id < best)) {
      best = r.id;
      best_sim = s;
    }
  }
  return best;
}

ClientMap as_map(const std::vector<ClientAgent>& v) {
  ClientMap m;
  for (const auto& c : v) m.emplace(c.id, c);
  return m;
}

TEST(InitRouters, SingleAttributeGivesOneRouter) {
  MockPromptBackend b;
  FeatureHashEmbedder e(64, 1);
  RouterIdAllocator ids;
  const auto routers = init_routers(as_map({make_client(ClientId::user("u"), "jazz")}), 5, b, e, 1, ids);
  ASSERT_EQ(routers.size(), 1u);
  EXPECT_EQ(routers[0].attributes, attrs({"jazz"}));
}

TEST(InitRouters, SeparatedGroups) {
  MockPromptBackend b;
  FeatureHashEmbedder e(256, 1);
  RouterIdAllocator ids;
  const auto clients = as_map({make_client(ClientId::user("u1"), "jazz blues"),
                               make_client(ClientId::item("i1"), "jazz blues"),
                               make_client(ClientId::user("u2"), "stapler paper"),
                               make_client(ClientId::item("i2"), "stapler paper")});
  const auto routers = init_routers(clients, 2, b, e, 3, ids);
  ASSERT_EQ(routers.size(), 2u);
  std::set<AttributeSet> groups{routers[0].attributes, routers[1].attributes};
  EXPECT_EQ(groups, (std::set<AttributeSet>{attrs({"jazz", "blues"}), attrs({"stapler", "paper"})}));
  for (const auto& r : routers) {
    EXPECT_EQ(r.profile, render_router_profile(r.attributes, 32));
    EXPECT_EQ(r.embedding, e.embed(r.profile));
  }
}

TEST(InitRouters, KOneTakesEverything) {
  MockPromptBackend b;
  FeatureHashEmbedder e(64, 1);
  RouterIdAllocator ids;
  const auto routers = init_routers(
      as_map({make_client(ClientId::user("u"), "jazz blues"), make_client(ClientId::item("i"), "metal")}), 1, b, e, 1,
      ids);
  ASSERT_EQ(routers.size(), 1u);
  EXPECT_EQ(routers[0].attributes, attrs({"jazz", "blues", "metal"}));
}

TEST(InitRouters, NoAttributes) {
  MockPromptBackend b;
  FeatureHashEmbedder e(64, 1);
  RouterIdAllocator ids;
  try {
    init_routers(as_map({make_client(ClientId::user("u"), "the of")}), 2, b, e, 1, ids);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NoAttributes);
  }
}

TEST(KMeans, FewerPointsThanClusters) {
  const std::vector<EmbeddingVector> pts{EmbeddingVector{{1, 0}}, EmbeddingVector{{0, 1}}};
  EXPECT_EQ(kmeans_assign(pts, 5, 1), (std::vector<std::size_t>{0, 1}));
}

TEST(KMeans, DeterministicForSeed) {
  FeatureHashEmbedder e(32, 2);
  std::vector<EmbeddingVector> pts;
  for (const char* w : {"a1", "b2", "c3", "d4", "e5", "f6", "g7", "h8"}) pts.push_back(e.embed(w));
  EXPECT_EQ(kmeans_assign(pts, 3, 9), kmeans_assign(pts, 3, 9));
}

TEST(DiffAttributes, SetDifferenceAndReplacement) {
  MockPromptBackend b;
  auto c = make_client(ClientId::user("u"), "jazz");
  EXPECT_FALSE(diff_attributes(c, "jazz", b).has_value());
  const auto d = diff_attributes(c, "jazz vinyl", b);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->added, attrs({"vinyl"}));
  c.attributes = attrs({"jazz"});
  const auto r = diff_attributes(c, "rock", b);
  EXPECT_EQ(r->added, attrs({"rock"}));
  EXPECT_EQ(c.attributes, attrs({"rock"}));
}

TEST(RouteAttribute, BasicCases) {
  FeatureHashEmbedder e(64, 1);
  const std::vector<RouterAgent> one{make_router(4, attrs({"metal"}), e)};
  EXPECT_EQ(route_attribute(Attribute::parse("jazz"), one, e), 4u);

  const std::vector<RouterAgent> three{make_router(1, attrs({"metal", "riffs"}), e),
                                       make_router(2, attrs({"jazz", "vinyl"}), e),
                                       make_router(3, attrs({"stapler"}), e)};
  EXPECT_EQ(route_attribute(Attribute::parse("vinyl"), three, e), 2u);

  // A stopword embeds to zero, so every cosine is 0 and the smallest id wins.
  std::vector<RouterAgent> shuffled{three[2], three[0], three[1]};
  EXPECT_EQ(route_attribute(Attribute::parse("the"), shuffled, e), 1u);

  try {
    route_attribute(Attribute::parse("x"), std::vector<RouterAgent>{}, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NoRouters);
  }
}

TEST(RouteAttribute, MatchesBruteForceOnRandomInstances) {
  Rng rng(17);
  FeatureHashEmbedder e(16, 5);
  const std::vector<std::string> vocab{"jazz", "vinyl", "metal", "riffs", "blues", "soul", "folk", "polka", "the"};
  for (int n = 0; n < 200; ++n) {
    std::vector<RouterAgent> routers;
    const auto k = 1 + uniform_index(rng, 5);
    for (std::uint64_t r = 0; r < k; ++r) {
      AttributeSet a;
      for (int t = 0; t < 3; ++t) a.insert(Attribute::parse(vocab[uniform_index(rng, vocab.size())]));
      routers.push_back(make_router(10 - r, a, e));
    }
    const auto probe = Attribute::parse(vocab[uniform_index(rng, vocab.size())]);
    EXPECT_EQ(route_attribute(probe, routers, e), brute_force_route(probe, routers, e));
  }
}

TEST(IntegrateBatch, EmptyDiffsNoCalls) {
  MockPromptBackend b;
  FeatureHashEmbedder e(64, 1);
  std::vector<RouterAgent> routers{make_router(1, attrs({"jazz"}), e)};
  const auto before = routers;
  EXPECT_TRUE(integrate_batch({}, routers, b, e).empty());
  EXPECT_EQ(routers, before);
  EXPECT_EQ(b.counter().get(PromptKind::Summarize), 0u);
}

TEST(IntegrateBatch, OnlyNearestRouterChanges) {
  MockPromptBackend b;
  FeatureHashEmbedder e(256, 1);
  std::vector<RouterAgent> routers{make_router(1, attrs({"metal", "riffs"}), e),
                                   make_router(2, attrs({"garden", "tools"}), e),
                                   make_router(3, attrs({"jazz", "vinyl"}), e)};
  const std::vector<AttributeDiff> diffs{{ClientId::user("u"), attrs({"vinyl"})}};
  ASSERT_EQ(route_attribute(Attribute::parse("vinyl"), routers, e), 3u);
  EXPECT_EQ(integrate_batch(diffs, routers, b, e), std::vector<RouterId>{3});
  EXPECT_EQ(routers[0].generation, 0u);
  EXPECT_EQ(routers[1].generation, 0u);
  EXPECT_EQ(routers[2].generation, 1u);
  EXPECT_EQ(routers[2].attributes, attrs({"jazz", "vinyl"}));
}

TEST(IntegrateBatch, OneSummarizePerRouter) {
  MockPromptBackend b;
  FeatureHashEmbedder e(256, 1);
  std::vector<RouterAgent> routers{make_router(1, attrs({"jazz", "vinyl", "saxophone"}), e),
                                   make_router(2, attrs({"metal"}), e)};
  const std::vector<AttributeDiff> diffs{{ClientId::user("u1"), attrs({"jazz", "vinyl"})},
                                         {ClientId::user("u2"), attrs({"saxophone"})}};
  EXPECT_EQ(integrate_batch(diffs, routers, b, e), std::vector<RouterId>{1});
  EXPECT_EQ(b.counter().get(PromptKind::Summarize), 1u);
  EXPECT_EQ(routers[0].attributes, attrs({"jazz", "vinyl", "saxophone"}));
}

TEST(IntegrateBatch, FailureLeavesRoutersUntouched) {
  MockPromptBackend inner;
  FaultInjectingBackend b(inner, PromptKind::Summarize, 2);
  FeatureHashEmbedder e(256, 1);
  std::vector<RouterAgent> routers{make_router(1, attrs({"jazz"}), e), make_router(2, attrs({"metal"}), e)};
  const auto before = routers;
  const std::vector<AttributeDiff> diffs{{ClientId::user("u1"), attrs({"jazz", "metal"})}};
  EXPECT_THROW(integrate_batch(diffs, routers, b, e), Error);
  EXPECT_EQ(routers, before);
}

TEST(Score, IndicatorAndColdBypass) {
  FeatureHashEmbedder e(256, 1);
  const auto r = make_router(1, attrs({"jazz", "vinyl"}), e);
  auto warm = make_client(ClientId::user("u"), "metal riffs");
  warm.interaction_count = 2;
  EXPECT_EQ(score(r, warm, e, false), 0.0);

  auto same = make_client(ClientId::user("v"), r.profile);
  same.interaction_count = 1;
  EXPECT_NEAR(score(r, same, e, false), 1.0, 1e-12);

  const EmbeddingVector unit{[] {
    std::vector<double> v(256, 0.0);
    v[0] = 1.0;
    return v;
  }()};
  RouterAgent probe = r;
  std::vector<double> mixed(256, 0.0);
  mixed[0] = 0.3;
  mixed[1] = std::sqrt(1 - 0.09);
  probe.embedding = EmbeddingVector{mixed};
  auto cold = make_client(ClientId::item("i"), "metal");
  EXPECT_NEAR(score_with(probe, cold, unit, true), 0.3, 1e-12);
  EXPECT_EQ(score_with(probe, cold, unit, false), 0.0);
  EXPECT_TRUE(is_cold(cold));
}

TEST(Multicast, NothingAboveTau) {
  FeatureHashEmbedder e(256, 1);
  std::vector<RouterAgent> routers{make_router(1, attrs({"jazz"}), e)};
  ClientMap clients = as_map({make_client(ClientId::user("u"), "metal")});
  clients.begin()->second.interaction_count = 3;
  const std::vector<RouterId> updated{1};
  const auto table = build_routing_table(updated, routers, clients, e, 0.5, 1);
  const auto before = clients;
  EXPECT_TRUE(multicast(updated, routers, clients, table).empty());
  EXPECT_EQ(clients, before);
}

TEST(Multicast, MatchesBruteForceThreshold) {
  Rng rng(23);
  FeatureHashEmbedder e(32, 3);
  const std::vector<std::string> vocab{"jazz", "vinyl", "metal", "riffs", "blues", "soul", "folk", "polka"};
  auto random_profile = [&] {
    std::string p;
    const auto n = 1 + uniform_index(rng, 3);
    for (std::uint64_t i = 0; i < n; ++i) p += vocab[uniform_index(rng, vocab.size())] + " ";
    return p;
  };
  for (int net = 0; net < 20; ++net) {
    std::vector<RouterAgent> routers;
    for (RouterId r = 1; r <= 4; ++r) routers.push_back(make_router(r, mock_extract(random_profile()), e));
    ClientMap clients;
    for (int c = 0; c < 20; ++c) {
      auto cl = make_client(ClientId::user("c" + std::to_string(c)), random_profile());
      cl.interaction_count = uniform_index(rng, 3);
      clients.emplace(cl.id, cl);
    }
    const double tau = 0.2 + 0.6 * uniform_unit(rng);
    const std::vector<RouterId> updated{1, 3, 4};
    std::set<std::pair<RouterId, ClientId>> expected;
    for (RouterId id : updated) {
      const auto& r = routers[id - 1];
      for (const auto& [cid, c] : clients) {
        bool overlap = false;
        for (const auto& a : c.attributes) overlap = overlap || r.attributes.count(a);
        const double s = (overlap || c.interaction_count == 0) ? dot(r.embedding, e.embed(c.profile)) : 0.0;
        if (s > tau) expected.insert({id, cid});
      }
    }
    const auto table = build_routing_table(updated, routers, clients, e, tau, 7);
    std::set<std::pair<RouterId, ClientId>> delivered;
    for (const auto& d : multicast(updated, routers, clients, table)) {
      EXPECT_TRUE(delivered.insert({d.router, d.client}).second);
      EXPECT_EQ(d.batch, 7u);
    }
    EXPECT_EQ(delivered, expected);
  }
}

TEST(DeliveryLog, OneObjectPerLine) {
  const std::vector<Delivery> log{{1, 2, ClientId::user("u"), 0.5}, {1, 3, ClientId::item("i"), 0.75}};
  const auto text = render_delivery_log(log);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("\"router\":2"), std::string::npos);
}

}  // namespace
}  // namespace recnet
