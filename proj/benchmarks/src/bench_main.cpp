#include <benchmark/benchmark.h>

#include <filesystem>

#include "recnet/config.hpp"
#include "recnet/embedding.hpp"
#include "recnet/engine.hpp"
#include "recnet/evaluation.hpp"
#include "recnet/pipeline.hpp"
#include "recnet/random.hpp"
#include "recnet/routing.hpp"

namespace {

using namespace recnet;

std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(RECNET_SOURCE_DIR) / "fixtures" / rel;
}

RouterAgent router_of(RouterId id, const AttributeSet& a, const EmbeddingBackend& e) {
  RouterAgent r;
  r.id = id;
  r.attributes = a;
  r.profile = render_router_profile(a, 32);
  r.embedding = e.embed(r.profile);
  return r;
}

std::vector<RouterAgent> random_routers(std::size_t k, const EmbeddingBackend& e, Rng& rng) {
  std::vector<RouterAgent> out;
  for (RouterId id = 1; id <= k; ++id) {
    AttributeSet a;
    for (int t = 0; t < 8; ++t) a.insert(Attribute::parse("w" + std::to_string(uniform_index(rng, 200))));
    out.push_back(router_of(id, a, e));
  }
  return out;
}

void BM_FeatureHash(benchmark::State& state) {
  FeatureHashEmbedder e(static_cast<std::size_t>(state.range(0)), 1);
  const std::string text = "smooth jazz vinyl records with live saxophone and late night piano trio";
  for (auto _ : state) benchmark::DoNotOptimize(e.embed(text));
}
BENCHMARK(BM_FeatureHash)->Arg(64)->Arg(256)->Arg(1024);

void BM_RouteAttribute(benchmark::State& state) {
  FeatureHashEmbedder inner(256, 1);
  CachedEmbedder e(inner);
  Rng rng(3);
  const auto routers = random_routers(static_cast<std::size_t>(state.range(0)), e, rng);
  const auto probe = Attribute::parse("w17");
  for (auto _ : state) benchmark::DoNotOptimize(route_attribute(probe, routers, e));
}
BENCHMARK(BM_RouteAttribute)->Arg(4)->Arg(16)->Arg(64);

void BM_Multicast(benchmark::State& state) {
  FeatureHashEmbedder inner(256, 1);
  CachedEmbedder e(inner);
  Rng rng(5);
  const auto routers = random_routers(6, e, rng);
  ClientMap clients;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    ClientAgent c;
    c.id = ClientId::user("u" + std::to_string(i));
    for (int t = 0; t < 4; ++t) c.profile += "w" + std::to_string(uniform_index(rng, 200)) + " ";
    c.attributes = mock_extract(c.profile);
    c.buffer = MessageBuffer(5);
    c.interaction_count = 1;
    clients.emplace(c.id, c);
  }
  const std::vector<RouterId> updated{1, 2, 3, 4, 5, 6};
  for (auto _ : state) {
    ClientMap copy = clients;
    const auto table = build_routing_table(updated, routers, copy, e, 0.1, 1);
    benchmark::DoNotOptimize(multicast(updated, routers, copy, table));
  }
}
BENCHMARK(BM_Multicast)->Arg(100)->Arg(1000);

void BM_EngineStream(benchmark::State& state) {
  const RunConfig c = load_run_config(fixture("configs/planted.json"));
  const Dataset d = load_dataset(c);
  const auto records = stream_records(d, c.network.seed);
  const auto clients = build_clients(d, c.network.buffer_capacity);
  for (auto _ : state) {
    auto backend = make_backend(c);
    auto embedder = make_embedder(c);
    Engine engine(c.network, *backend, *embedder);
    engine.initialize(clients);
    benchmark::DoNotOptimize(engine.run(records));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_EngineStream)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
