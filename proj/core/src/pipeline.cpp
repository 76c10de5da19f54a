#include "recnet/pipeline.hpp"

#include <fstream>
#include <future>
#include <sstream>

#include "recnet/error.hpp"

namespace recnet {

Dataset load_dataset(const RunConfig& c) {
  Dataset d = c.dataset ? ingest(*c.dataset, c.format) : gen_synthetic(*c.synthetic).dataset;
  if (c.five_core) d = five_core(d);
  if (c.sample_users > 0) d = sample_users(d, c.sample_users, c.network.seed);
  if (c.max_history > 0) d = truncate_history(d, c.max_history);
  return d;
}

namespace {

MockOptions mock_options(const NetworkConfig& n) {
  MockOptions o;
  o.max_attributes = n.max_attributes;
  o.split_threshold = n.split_threshold;
  o.merge_threshold = n.merge_threshold;
  o.seed = n.seed;
  o.embedding_dim = n.embedding_dim;
  return o;
}

}  // namespace

std::unique_ptr<PromptBackend> make_backend(const RunConfig& c) {
  if (c.network.backend == BackendKind::Mock) return std::make_unique<MockPromptBackend>(mock_options(c.network));
  ChatBackendConfig chat;
  chat.endpoint = c.endpoint;
  chat.temperature = c.temperature;
  chat.template_dir = c.template_dir;
  chat.fallback = mock_options(c.network);
  auto transport = make_http_transport(c.endpoint.base_url, std::chrono::seconds(c.endpoint.timeout_seconds));
  return std::make_unique<HttpPromptBackend>(std::move(chat), std::move(transport));
}

std::unique_ptr<EmbeddingBackend> make_embedder(const RunConfig& c) {
  if (c.embedding.kind == EmbedderKind::Hash) {
    return std::make_unique<FeatureHashEmbedder>(c.network.embedding_dim, c.network.seed);
  }
  EndpointConfig e = c.embedding.endpoint;
  if (e.path.empty()) e.path = "/v1/embeddings";
  auto transport = make_http_transport(e.base_url, std::chrono::seconds(e.timeout_seconds));
  return std::make_unique<RemoteEmbedder>(std::move(e), c.network.embedding_dim, std::move(transport));
}

EvalOptions eval_options(const RunConfig& c) {
  EvalOptions o;
  o.network = c.network;
  o.repetitions = c.repetitions;
  o.negatives = c.negatives;
  o.cold_start_augmentation = c.cold_start_augmentation;
  o.parallelism = c.parallelism;
  o.backend = [c](const NetworkConfig& n) {
    RunConfig copy = c;
    copy.network = n;
    return make_backend(copy);
  };
  o.embedder = [c](const NetworkConfig& n) {
    RunConfig copy = c;
    copy.network = n;
    return make_embedder(copy);
  };
  return o;
}

RunReport continue_run(Engine& engine, std::span<const InteractionRecord> records, const BatchHook& hook) {
  const std::uint64_t start = engine.state().records_processed;
  if (start > records.size()) {
    throw Error(ErrorCode::InvalidValue, "snapshot is past the end of the stream (" + std::to_string(start) + " > " +
                                             std::to_string(records.size()) + ")");
  }
  for (std::size_t i = start; i < records.size(); ++i) {
    engine.step(records[i]);
    if (auto batch = engine.maybe_run_router_stage(); batch && hook) hook(engine, *batch);
  }
  if (auto batch = engine.maybe_run_router_stage(true); batch && hook) hook(engine, *batch);
  return engine.report();
}

json golden_document(const RunConfig& config) {
  RunConfig c = config;
  c.network.backend = BackendKind::Mock;
  c.embedding.kind = EmbedderKind::Hash;
  const Dataset d = load_dataset(c);
  auto backend = make_backend(c);
  auto embedder = make_embedder(c);
  Engine engine(c.network, *backend, *embedder);
  engine.initialize(build_clients(d, c.network.buffer_capacity));
  const auto records = stream_records(d, c.network.seed);
  const RunReport report = continue_run(engine, records);

  json routers = json::array();
  for (const auto& r : engine.state().routers) routers.push_back({{"id", r.id}, {"profile", r.profile}});
  json profiles = json::object();
  for (const auto& [id, cl] : engine.state().clients) profiles[id.key()] = cl.profile;
  return {{"fixture", c.name}, {"report", report.to_json()}, {"routers", routers}, {"profiles", profiles}};
}

std::string render_golden(const json& doc) { return doc.dump(2) + "\n"; }

std::string_view to_string(GoldenStatus s) {
  switch (s) {
    case GoldenStatus::Pass: return "pass";
    case GoldenStatus::Mismatch: return "mismatch";
    case GoldenStatus::Unverified: return "unverified";
    case GoldenStatus::Error: return "error";
  }
  return "error";
}

namespace {

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

GoldenResult verify_one(const json& entry, const std::filesystem::path& base, bool update) {
  GoldenResult r;
  r.name = entry.value("name", std::string("?"));
  try {
    const RunConfig c = load_run_config(base / entry.at("config").get<std::string>());
    const std::filesystem::path golden = base / entry.at("golden").get<std::string>();
    const json doc = golden_document(c);
    const std::string actual = render_golden(doc);
    const auto expected = read_file(golden);
    if (expected && *expected == actual) {
      r.status = GoldenStatus::Pass;
      return r;
    }
    if (expected) {
      json old;
      try {
        old = json::parse(*expected);
      } catch (const json::parse_error&) {
        old = nullptr;
      }
      r.detail = json::diff(old, doc).dump();
    }
    if (update) {
      std::ofstream(golden, std::ios::binary) << actual;
      r.status = GoldenStatus::Pass;
      r.detail = expected ? "rewritten: " + r.detail : "written";
      return r;
    }
    r.status = expected ? GoldenStatus::Mismatch : GoldenStatus::Unverified;
    if (!expected) r.detail = "no golden at " + golden.string();
  } catch (const std::exception& ex) {
    r.status = GoldenStatus::Error;
    r.detail = ex.what();
  }
  return r;
}

}  // namespace

std::vector<GoldenResult> verify_goldens(const std::filesystem::path& manifest, bool update) {
  const auto text = read_file(manifest);
  if (!text) throw Error(ErrorCode::MissingReport, "cannot read manifest " + manifest.string());
  json m;
  try {
    m = json::parse(*text);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::ParseError, manifest.string() + ": " + ex.what());
  }
  const auto base = manifest.parent_path();
  std::vector<std::future<GoldenResult>> pending;
  for (const auto& entry : m.at("fixtures")) {
    pending.push_back(std::async(std::launch::async, verify_one, entry, base, update));
  }
  std::vector<GoldenResult> out;
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

}  // namespace recnet
