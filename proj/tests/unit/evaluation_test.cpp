#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "recnet/error.hpp"
#include "recnet/evaluation.hpp"
#include "recnet/serialization.hpp"
#include "recnet/text.hpp"
#include "unit/support.hpp"

namespace recnet {
namespace {

using testing::fixture;

Dataset parse(const std::string& text, DatasetFormat f = DatasetFormat::Jsonl) {
  std::istringstream in(text);
  return parse_dataset(in, f, "t");
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Event ev(std::string u, std::string i, std::int64_t t) { return {std::move(u), std::move(i), t, "", "", {}}; }

TEST(Ingest, CdsSampleStatistics) {
  const auto d = ingest(fixture("data/cds_sample.jsonl"), DatasetFormat::Amazon);
  const auto s = stats(d);
  EXPECT_EQ(s.users, 100u);
  EXPECT_EQ(s.items, 613u);
  EXPECT_EQ(s.interactions, 800u);
  EXPECT_EQ(format_sparsity(s.sparsity), "98.69%");
}

TEST(Ingest, EmptyInput) {
  const auto d = parse("");
  EXPECT_TRUE(d.events.empty());
  EXPECT_EQ(stats(d).interactions, 0u);
  EXPECT_TRUE(parse("\n   \n").events.empty());
}

TEST(Ingest, OutOfOrderRowsAreSorted) {
  const std::string sorted = R"({"user":"a","item":"x","timestamp":1}
{"user":"b","item":"y","timestamp":2}
{"user":"a","item":"z","timestamp":3}
)";
  const std::string shuffled = R"({"user":"a","item":"z","timestamp":3}
{"user":"a","item":"x","timestamp":1}
{"user":"b","item":"y","timestamp":2}
{"user":"a","item":"x","timestamp":1}
)";
  EXPECT_EQ(parse(sorted).events, parse(shuffled).events);
}

TEST(Ingest, AmazonFieldMapping) {
  const auto d = parse(R"({"reviewerID":"R1","asin":"B1","unixReviewTime":"99","summary":"Great Jazz","reviewText":"x"})",
                       DatasetFormat::Amazon);
  ASSERT_EQ(d.events.size(), 1u);
  EXPECT_EQ(d.events[0].user, "R1");
  EXPECT_EQ(d.events[0].item, "B1");
  EXPECT_EQ(d.events[0].timestamp, 99);
  EXPECT_EQ(d.events[0].title, "Great Jazz");
}

TEST(Ingest, MalformedCorpus) {
  const json expected = json::parse(read(fixture("data/malformed.expected.json")));
  const auto codes = expected.at("codes").get<std::vector<std::string>>();
  std::ifstream in(fixture("data/malformed.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(n, codes.size());
    try {
      parse(line);
      ADD_FAILURE() << "row " << n + 1 << " parsed: " << line;
    } catch (const Error& e) {
      EXPECT_EQ(std::string(to_string(e.code())), codes[n]) << "row " << n + 1 << ": " << e.what();
      EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
    ++n;
  }
  EXPECT_EQ(n, 20u);
}

TEST(Ingest, ErrorNamesTheLine) {
  try {
    ingest(fixture("data/bad_line7.jsonl"), DatasetFormat::Jsonl);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
}

TEST(Ingest, WriteParsesBack) {
  Dataset d = ingest(fixture("data/six_clients.jsonl"), DatasetFormat::Jsonl);
  d.pre_sampled = true;
  std::ostringstream out;
  write_dataset(out, d);
  Dataset back = parse(out.str());
  back.name = d.name;
  EXPECT_EQ(back, d);
}

TEST(FiveCore, FixpointIsUnchanged) {
  Dataset d;
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 5; ++i) d.events.push_back(ev("u" + std::to_string(u), "i" + std::to_string(i), u * 10 + i));
  }
  canonicalize(d);
  EXPECT_EQ(five_core(d), d);
  EXPECT_TRUE(five_core(Dataset{}).events.empty());
}

TEST(FiveCore, ShortUserRemovedWithCascade) {
  Dataset d;
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 5; ++i) d.events.push_back(ev("u" + std::to_string(u), "i" + std::to_string(i), u * 10 + i));
  }
  // i5 has five events only thanks to the short user; dropping u9 drops i5,
  // which leaves u0..u3 at five events and u4 (who also rated i5) too.
  for (int u = 0; u < 4; ++u) d.events.push_back(ev("u" + std::to_string(u), "i5", 100 + u));
  for (int i : {0, 1, 2, 5}) d.events.push_back(ev("u9", "i" + std::to_string(i), 200 + i));
  canonicalize(d);
  const auto core = five_core(d);
  for (const auto& e : core.events) {
    EXPECT_NE(e.user, "u9");
    EXPECT_NE(e.item, "i5");
  }
  EXPECT_EQ(core.events.size(), 25u);
}

TEST(FiveCore, DeepCascadeEmptiesChain) {
  Dataset d;
  // Every user has exactly five events but one item per user is shared with
  // a four-event user; removing the latter empties everything.
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 4; ++i) d.events.push_back(ev("u" + std::to_string(u), "i" + std::to_string(i), u * 10 + i));
    d.events.push_back(ev("u" + std::to_string(u), "solo" + std::to_string(u), u * 10 + 9));
  }
  canonicalize(d);
  EXPECT_TRUE(five_core(d).events.empty());
}

TEST(SampleAndTruncate, DeterministicSubsets) {
  const auto d = ingest(fixture("data/cds_sample.jsonl"), DatasetFormat::Amazon);
  const auto a = sample_users(d, 10, 5), b = sample_users(d, 10, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(stats(a).users, 10u);
  EXPECT_EQ(sample_users(d, 1000, 5), d);
  const auto t = truncate_history(d, 3);
  EXPECT_EQ(stats(t).interactions, 300u);
}

TEST(Split, TwoEventUser) {
  Dataset d;
  d.events = {ev("u", "a", 1), ev("u", "b", 2), ev("v", "c", 1), ev("v", "d", 3)};
  for (int i = 0; i < 12; ++i) d.events.push_back(ev("w", "x" + std::to_string(i), 10 + i));
  canonicalize(d);
  const auto s = make_split(d, 3, 3, 3);
  EXPECT_EQ(s.targets.at("u"), "b");
  const auto u_training = std::count_if(s.training.begin(), s.training.end(),
                                        [](const InteractionRecord& r) { return r.user == ClientId::user("u"); });
  EXPECT_EQ(u_training, 1);
  EXPECT_EQ(s.lists.size(), 3u);
  EXPECT_EQ(s.lists[0][0].items.size(), 4u);
}

TEST(Split, TooShortUser) {
  Dataset d;
  d.events = {ev("u", "a", 1), ev("v", "b", 1), ev("v", "c", 2)};
  try {
    make_split(d, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UserTooShort);
  }
}

TEST(Split, ReproducibleAndNegativesOutsideHistory) {
  for (const char* name : {"data/planted.jsonl", "data/six_clients.jsonl"}) {
    const auto d = ingest(fixture(name), DatasetFormat::Jsonl);
    const std::uint32_t negs = std::string(name).find("six") != std::string::npos ? 1 : 9;
    const auto a = make_split(d, 11, 3, negs), b = make_split(d, 11, 3, negs);
    EXPECT_EQ(a, b);
    std::map<std::string, std::set<std::string>> history;
    for (const auto& e : d.events) history[e.user].insert(e.item);
    for (const auto& rep : a.lists) {
      for (const auto& list : rep) {
        EXPECT_EQ(list.items.size(), negs + 1);
        EXPECT_EQ(std::count(list.items.begin(), list.items.end(), list.target), 1);
        for (const auto& item : list.items) {
          if (item != list.target) {
            EXPECT_FALSE(history[list.user].count(item)) << list.user << " " << item;
          }
        }
      }
    }
    // six_clients supplies its own training negatives; only sampled ones are checked.
    for (const auto& r : a.training) {
      if (!d.events.front().negative) {
        EXPECT_FALSE(history[r.user.raw].count(r.negative.raw));
      }
      EXPECT_NE(a.targets.at(r.user.raw), r.positive.raw);
    }
  }
}

TEST(Split, RepetitionsDiffer) {
  const auto d = ingest(fixture("data/planted.jsonl"), DatasetFormat::Jsonl);
  const auto s = make_split(d, 7, 3, 9);
  EXPECT_NE(s.lists[0], s.lists[1]);
}

TEST(Ndcg, ClosedForms) {
  std::vector<ClientId> ranked;
  for (int i = 1; i <= 10; ++i) ranked.push_back(ClientId::item("i" + std::to_string(i)));
  for (std::size_t k : {1u, 5u, 10u}) EXPECT_DOUBLE_EQ(ndcg_at_k(ranked, ClientId::item("i1"), k), 1.0);
  EXPECT_NEAR(ndcg_at_k(ranked, ClientId::item("i4"), 10), 0.430677, 1e-6);
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranked, ClientId::item("i4"), 10), 1.0 / std::log2(5.0));
  EXPECT_EQ(ndcg_at_k(ranked, ClientId::item("i6"), 5), 0.0);
  try {
    ndcg_at_k(ranked, ClientId::item("zz"), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruthMissing);
  }
}

TEST(Ndcg, MonotoneInRank) {
  std::vector<ClientId> ranked;
  for (int i = 0; i < 10; ++i) ranked.push_back(ClientId::item("i" + std::to_string(i)));
  for (std::size_t k = 1; k <= 10; ++k) {
    for (std::size_t pos = 1; pos < ranked.size(); ++pos) {
      EXPECT_GE(ndcg_at_k(ranked, ranked[pos - 1], k), ndcg_at_k(ranked, ranked[pos], k));
    }
  }
}

TEST(MeanOf, ArithmeticMean) {
  const std::vector<Metrics> runs{{0.1, 0.2, 0.3, 10}, {0.4, 0.5, 0.6, 10}, {0.7, 0.8, 0.95, 10}};
  const auto m = mean_of(runs);
  EXPECT_NEAR(m.n1, (0.1 + 0.4 + 0.7) / 3, 1e-12);
  EXPECT_NEAR(m.n5, (0.2 + 0.5 + 0.8) / 3, 1e-12);
  EXPECT_NEAR(m.n10, (0.3 + 0.6 + 0.95) / 3, 1e-12);
}

EvalOptions planted_options() {
  EvalOptions o;
  o.network.k_init = 8;
  o.network.tau = 0.35;
  o.network.buffer_capacity = 5;
  o.network.update_size = 16;
  o.network.split_threshold = 16;
  o.network.merge_threshold = 0.35;
  o.network.seed = 7;
  return o;
}

TEST(RankCandidates, MatchesBruteForceOverlap) {
  const auto d = ingest(fixture("data/planted.jsonl"), DatasetFormat::Jsonl);
  const auto o = planted_options();
  const auto split = make_split(d, o.network.seed, 1, 9);
  auto backend = o.backend(o.network);
  auto embedder = o.embedder(o.network);
  Engine engine(o.network, *backend, *embedder);
  engine.initialize(build_clients(d, o.network.buffer_capacity));
  engine.run(split.training);
  for (const auto& list : split.lists[0]) {
    const auto user = ClientId::user(list.user);
    const std::string profile = engine.merged_profile(user);
    std::vector<ClientId> items;
    for (const auto& i : list.items) items.push_back(ClientId::item(i));
    const auto ranked = rank_candidates(engine, user, items, {}, &profile);
    const auto u = mock_extract(profile);
    std::vector<std::pair<double, ClientId>> oracle;
    for (const auto& i : items) {
      const auto a = mock_extract(engine.state().clients.at(i).profile);
      std::size_t inter = 0;
      for (const auto& x : a) inter += u.count(x);
      const std::size_t uni = u.size() + a.size() - inter;
      oracle.push_back({uni ? -static_cast<double>(inter) / static_cast<double>(uni) : 0.0, i});
    }
    std::sort(oracle.begin(), oracle.end());
    for (std::size_t k = 0; k < ranked.size(); ++k) EXPECT_EQ(ranked[k], oracle[k].second);
  }
}

TEST(Sweep, RepetitionsAndMeans) {
  const auto d = ingest(fixture("data/planted.jsonl"), DatasetFormat::Jsonl);
  auto o = planted_options();
  o.parallelism = 2;
  const std::vector<Variant> variants{Variant::Full, Variant::NoFpo};
  const auto report = sweep(d, variants, o);
  ASSERT_EQ(report.rows.size(), 2u);
  for (const auto& row : report.rows) {
    ASSERT_FALSE(row.error.has_value());
    ASSERT_EQ(row.repetitions.size(), 3u);
    std::vector<Metrics> ms;
    for (const auto& r : row.repetitions) ms.push_back(r.metrics);
    const auto m = mean_of(ms);
    EXPECT_NEAR(row.mean.n5, m.n5, 1e-12);
    EXPECT_NEAR(row.mean.n10, m.n10, 1e-12);
  }
  const auto again = sweep(d, variants, o);
  EXPECT_EQ(report.to_csv(), again.to_csv());
  EXPECT_EQ(report.to_json().dump(), again.to_json().dump());
  EXPECT_EQ(report.to_table(), again.to_table());
  const auto csv = report.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dataset,variant,repetition,n1,n5,n10");
}

TEST(Sweep, FailingVariantIsIsolated) {
  const auto d = ingest(fixture("data/planted.jsonl"), DatasetFormat::Jsonl);
  auto o = planted_options();
  o.repetitions = 1;
  o.backend = [](const NetworkConfig& n) -> std::unique_ptr<PromptBackend> {
    if (n.variant == Variant::NoFpo) throw Error(ErrorCode::BackendUnavailable, "down");
    return std::make_unique<MockPromptBackend>();
  };
  const std::vector<Variant> variants{Variant::Full, Variant::NoFpo};
  const auto report = sweep(d, variants, o);
  EXPECT_FALSE(report.rows[0].error.has_value());
  EXPECT_TRUE(report.rows[1].error.has_value());
  EXPECT_TRUE(report.any_success());
}

TEST(Synthetic, NoCrossoverMeansNoCrossGroupEvents) {
  SynthConfig c;
  c.crossover_rate = 0.0;
  c.seed = 3;
  const auto s = gen_synthetic(c);
  for (const auto& e : s.dataset.events) EXPECT_EQ(s.user_group.at(e.user), s.item_group.at(e.item));
}

TEST(Synthetic, DeterministicAndDisjointVocabularies) {
  SynthConfig c;
  c.seed = 5;
  std::ostringstream a, b;
  write_dataset(a, gen_synthetic(c).dataset);
  write_dataset(b, gen_synthetic(c).dataset);
  EXPECT_EQ(a.str(), b.str());
  const auto s = gen_synthetic(c);
  std::set<std::string> seen;
  for (const auto& group : s.vocab) {
    for (const auto& w : group) EXPECT_TRUE(seen.insert(w).second) << w;
  }
  for (const auto& e : s.dataset.events) {
    for (const auto& t : text::tokenize(e.title)) {
      const auto& v = s.vocab[s.item_group.at(e.item)];
      EXPECT_NE(std::find(v.begin(), v.end(), t), v.end());
    }
  }
}

TEST(Synthetic, ReproducesCommittedFixture) {
  const auto cfg = json::parse(read(fixture("configs/planted.synth.json"))).get<SynthConfig>();
  std::ostringstream out;
  write_dataset(out, gen_synthetic(cfg).dataset);
  EXPECT_EQ(out.str(), read(fixture("data/planted.jsonl")));
}

TEST(Synthetic, RejectsImpossibleConfigs) {
  SynthConfig c;
  c.groups = 1;
  EXPECT_THROW(gen_synthetic(c), Error);
  SynthConfig d;
  d.crossover_rate = 1.5;
  EXPECT_THROW(gen_synthetic(d), Error);
  EXPECT_THROW(json::parse(R"({"groups":3,"bogus":1})").get<SynthConfig>(), std::exception);
}

TEST(BuildClients, ItemsCarryFirstPositiveTitle) {
  const auto d = ingest(fixture("data/six_clients.jsonl"), DatasetFormat::Jsonl);
  const auto clients = build_clients(d, 3);
  std::map<ClientId, std::string> profiles;
  for (const auto& c : clients) profiles[c.id] = c.profile;
  EXPECT_EQ(profiles.at(ClientId::item("i3")), "metal guitar riffs");
  EXPECT_EQ(profiles.at(ClientId::user("u1")), "");
  EXPECT_EQ(clients.size(), 6u);
}

}  // namespace
}  // namespace recnet
