#include "recnet/config.hpp"

#include <fstream>
#include <set>

#include "recnet/error.hpp"

namespace recnet {

std::string_view to_string(EmbedderKind k) { return k == EmbedderKind::Hash ? "hash" : "remote"; }

EmbedderKind parse_embedder_kind(std::string_view s) {
  if (s == "hash") return EmbedderKind::Hash;
  if (s == "remote") return EmbedderKind::Remote;
  throw Error(ErrorCode::ConfigError, "unknown embedder '" + std::string(s) + "'");
}

std::vector<Variant> RunConfig::eval_variants() const {
  return variants.empty() ? std::vector<Variant>{network.variant} : variants;
}

void RunConfig::validate() const {
  network.validate();
  if (dataset.has_value() == synthetic.has_value()) {
    throw Error(ErrorCode::ConfigError, "set exactly one of 'dataset' and 'synthetic'");
  }
  if (repetitions == 0) throw Error(ErrorCode::ConfigError, "repetitions must be positive");
  if (negatives == 0) throw Error(ErrorCode::ConfigError, "negatives must be positive");
  if (parallelism == 0) throw Error(ErrorCode::ConfigError, "parallelism must be positive");
  if (network.backend == BackendKind::Http && endpoint.base_url.empty()) {
    throw Error(ErrorCode::ConfigError, "http backend needs endpoint.base_url");
  }
  if (embedding.kind == EmbedderKind::Remote && embedding.endpoint.base_url.empty()) {
    throw Error(ErrorCode::ConfigError, "remote embedder needs embedding.endpoint.base_url");
  }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw Error(ErrorCode::ConfigError, "unknown key '" + where + k + "'");
  }
}

EndpointConfig parse_endpoint(const json& j, const std::string& where) {
  reject_unknown(j, {"base_url", "path", "model", "credential_env", "timeout_seconds"}, where);
  EndpointConfig e;
  e.base_url = j.value("base_url", e.base_url);
  e.path = j.value("path", e.path);
  e.model = j.value("model", e.model);
  e.credential_env = j.value("credential_env", e.credential_env);
  e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
  return e;
}

json endpoint_json(const EndpointConfig& e) {
  return {{"base_url", e.base_url},
          {"path", e.path},
          {"model", e.model},
          {"credential_env", e.credential_env},
          {"timeout_seconds", e.timeout_seconds}};
}

const std::set<std::string>& network_keys() {
  static const std::set<std::string> keys{"k_init",          "tau",        "buffer_capacity", "update_size",
                                          "embedding_dim",   "seed",       "variant",         "backend",
                                          "split_threshold", "merge_threshold", "max_rules", "max_attributes",
                                          "neighbor_k",      "rerank_pool"};
  return keys;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

template <typename T>
void get(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(field);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + ex.what());
  }
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  std::set<std::string> known{"name",         "dataset",      "format",
                              "synthetic",    "five_core",    "sample_users",
                              "max_history",  "output_dir",   "variants",
                              "repetitions",  "negatives",    "parallelism",
                              "cold_start_augmentation",      "snapshot_every",
                              "endpoint",     "temperature",  "template_dir",
                              "embedding"};
  known.insert(network_keys().begin(), network_keys().end());
  reject_unknown(j, known, "");

  RunConfig c;
  json net = json::object();
  for (const auto& k : network_keys()) {
    if (j.contains(k)) net[k] = j.at(k);
  }
  try {
    c.network = net.get<NetworkConfig>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ConfigError, std::string("bad network value: ") + ex.what());
  }

  get(j, "name", c.name);
  if (j.contains("dataset") && !j.at("dataset").is_null()) {
    c.dataset = resolve(base_dir, j.at("dataset").get<std::string>());
  }
  if (j.contains("format")) c.format = parse_dataset_format(j.at("format").get<std::string>());
  if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
    try {
      c.synthetic = j.at("synthetic").get<SynthConfig>();
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::ConfigError, std::string("bad synthetic value: ") + ex.what());
    }
  }
  get(j, "five_core", c.five_core);
  get(j, "sample_users", c.sample_users);
  get(j, "max_history", c.max_history);
  if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  if (j.contains("variants")) {
    for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
  }
  get(j, "repetitions", c.repetitions);
  get(j, "negatives", c.negatives);
  get(j, "parallelism", c.parallelism);
  get(j, "cold_start_augmentation", c.cold_start_augmentation);
  get(j, "snapshot_every", c.snapshot_every);
  if (j.contains("endpoint")) c.endpoint = parse_endpoint(j.at("endpoint"), "endpoint.");
  get(j, "temperature", c.temperature);
  if (j.contains("template_dir") && !j.at("template_dir").is_null()) {
    c.template_dir = resolve(base_dir, j.at("template_dir").get<std::string>());
  }
  if (j.contains("embedding")) {
    const json& e = j.at("embedding");
    reject_unknown(e, {"kind", "endpoint"}, "embedding.");
    if (e.contains("kind")) c.embedding.kind = parse_embedder_kind(e.at("kind").get<std::string>());
    if (e.contains("endpoint")) c.embedding.endpoint = parse_endpoint(e.at("endpoint"), "embedding.endpoint.");
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + ex.what());
  }
  return parse_run_config(j, path.parent_path());
}

json resolved_config(const RunConfig& c) {
  json j = c.network;
  j["name"] = c.name;
  j["dataset"] = c.dataset ? json(c.dataset->string()) : json(nullptr);
  j["format"] = std::string(to_string(c.format));
  j["synthetic"] = c.synthetic ? json(*c.synthetic) : json(nullptr);
  j["five_core"] = c.five_core;
  j["sample_users"] = c.sample_users;
  j["max_history"] = c.max_history;
  j["output_dir"] = c.output_dir.string();
  json variants = json::array();
  for (auto v : c.variants) variants.push_back(std::string(to_string(v)));
  j["variants"] = std::move(variants);
  j["repetitions"] = c.repetitions;
  j["negatives"] = c.negatives;
  j["parallelism"] = c.parallelism;
  j["cold_start_augmentation"] = c.cold_start_augmentation;
  j["snapshot_every"] = c.snapshot_every;
  j["endpoint"] = endpoint_json(c.endpoint);
  j["temperature"] = c.temperature;
  j["template_dir"] = c.template_dir ? json(c.template_dir->string()) : json(nullptr);
  j["embedding"] = {{"kind", std::string(to_string(c.embedding.kind))},
                    {"endpoint", endpoint_json(c.embedding.endpoint)}};
  return j;
}

}  // namespace recnet
