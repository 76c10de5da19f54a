#include "recnet/serialization.hpp"

#include <set>
#include <string>

#include "recnet/error.hpp"

namespace recnet {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::MissingField, key);
  }
  return j.at(key);
}

void to_json(json& j, const ClientId& id) {
  j = json{{"kind", id.is_user() ? "user" : "item"}, {"raw", id.raw}};
}

void from_json(const json& j, ClientId& id) {
  const auto kind = require(j, "kind").get<std::string>();
  if (kind == "user") {
    id.kind = ClientKind::User;
  } else if (kind == "item") {
    id.kind = ClientKind::Item;
  } else {
    throw Error(ErrorCode::InvalidValue, "client kind '" + kind + "'");
  }
  id.raw = require(j, "raw").get<std::string>();
}

void to_json(json& j, const EmbeddingVector& v) {
  j = json{{"values", v.values}, {"dim", v.dim()}};
}

void from_json(const json& j, EmbeddingVector& v) {
  v.values = require(j, "values").get<std::vector<double>>();
  if (require(j, "dim").get<std::size_t>() != v.values.size()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding dim does not match values");
  }
}

void to_json(json& j, const PropagatedMessage& m) {
  j = json{{"router_id", m.router_id},
           {"router_profile", m.router_profile},
           {"router_attributes", m.router_attributes},
           {"seq", m.seq}};
  if (m.source_client) j["source_client"] = *m.source_client;
}

void from_json(const json& j, PropagatedMessage& m) {
  m.router_id = require(j, "router_id").get<RouterId>();
  m.router_profile = require(j, "router_profile").get<std::string>();
  m.router_attributes = require(j, "router_attributes").get<AttributeSet>();
  m.seq = require(j, "seq").get<std::uint64_t>();
  m.source_client.reset();
  if (j.contains("source_client")) m.source_client = j.at("source_client").get<ClientId>();
}

void to_json(json& j, const MessageBuffer& b) {
  j = json{{"capacity", b.capacity()}, {"entries", b.entries()}, {"next_seq", b.next_seq()}};
}

void from_json(const json& j, MessageBuffer& b) {
  auto entries = require(j, "entries").get<std::deque<PropagatedMessage>>();
  b = MessageBuffer::from_parts(require(j, "capacity").get<std::size_t>(), std::move(entries),
                                require(j, "next_seq").get<std::uint64_t>());
}

void to_json(json& j, const FilterMemory& f) {
  j = json{{"rules", f.rules}, {"max_rules", f.max_rules}};
}

void from_json(const json& j, FilterMemory& f) {
  f.rules = require(j, "rules").get<std::vector<FilterRule>>();
  f.max_rules = require(j, "max_rules").get<std::size_t>();
}

void to_json(json& j, const ClientAgent& c) {
  j = json{{"id", c.id},
           {"profile", c.profile},
           {"attributes", c.attributes},
           {"buffer", c.buffer},
           {"filter_memory", c.filter_memory},
           {"interaction_count", c.interaction_count}};
}

void from_json(const json& j, ClientAgent& c) {
  c.id = require(j, "id").get<ClientId>();
  c.profile = require(j, "profile").get<std::string>();
  c.attributes = require(j, "attributes").get<AttributeSet>();
  c.buffer = require(j, "buffer").get<MessageBuffer>();
  c.filter_memory = require(j, "filter_memory").get<FilterMemory>();
  c.interaction_count = require(j, "interaction_count").get<std::uint64_t>();
}

void to_json(json& j, const RouterAgent& r) {
  j = json{{"id", r.id},
           {"profile", r.profile},
           {"attributes", r.attributes},
           {"embedding", r.embedding},
           {"generation", r.generation}};
}

void from_json(const json& j, RouterAgent& r) {
  r.id = require(j, "id").get<RouterId>();
  r.profile = require(j, "profile").get<std::string>();
  r.attributes = require(j, "attributes").get<AttributeSet>();
  r.embedding = require(j, "embedding").get<EmbeddingVector>();
  r.generation = require(j, "generation").get<std::uint64_t>();
}

void to_json(json& j, const InteractionRecord& r) {
  j = json{{"user", r.user},
           {"positive", r.positive},
           {"negative", r.negative},
           {"timestamp", r.timestamp}};
}

void from_json(const json& j, InteractionRecord& r) {
  r.user = require(j, "user").get<ClientId>();
  r.positive = require(j, "positive").get<ClientId>();
  r.negative = require(j, "negative").get<ClientId>();
  r.timestamp = require(j, "timestamp").get<std::int64_t>();
}

void to_json(json& j, const ModuleRef& m) {
  switch (m.kind) {
    case ModuleRef::Kind::ClientProfile:
      j = json{{"target", "client_profile"}, {"client", *m.client}};
      break;
    case ModuleRef::Kind::FilterMem:
      j = json{{"target", "filter_mem"}, {"client", *m.client}};
      break;
    case ModuleRef::Kind::Router:
      j = json{{"target", "router"}, {"router", m.router}};
      break;
  }
}

void from_json(const json& j, ModuleRef& m) {
  const auto target = require(j, "target").get<std::string>();
  if (target == "router") {
    m = ModuleRef::router_of(require(j, "router").get<RouterId>());
  } else if (target == "client_profile") {
    m = ModuleRef::profile_of(require(j, "client").get<ClientId>());
  } else if (target == "filter_mem") {
    m = ModuleRef::filter_of(require(j, "client").get<ClientId>());
  } else {
    throw Error(ErrorCode::InvalidValue, "module target '" + target + "'");
  }
}

void to_json(json& j, const TextualGradient& g) {
  j = json{{"module_ref", g.module_ref},
           {"reward_text", g.reward_text},
           {"gradient_text", g.gradient_text}};
}

void from_json(const json& j, TextualGradient& g) {
  g.module_ref = require(j, "module_ref").get<ModuleRef>();
  g.reward_text = require(j, "reward_text").get<std::string>();
  g.gradient_text = require(j, "gradient_text").get<std::string>();
}

void to_json(json& j, const NetworkConfig& c) {
  j = json{{"k_init", c.k_init},
           {"tau", c.tau},
           {"buffer_capacity", c.buffer_capacity},
           {"update_size", c.update_size},
           {"embedding_dim", c.embedding_dim},
           {"seed", c.seed},
           {"variant", std::string(to_string(c.variant))},
           {"backend", std::string(to_string(c.backend))},
           {"split_threshold", c.split_threshold},
           {"merge_threshold", c.merge_threshold},
           {"max_rules", c.max_rules},
           {"max_attributes", c.max_attributes},
           {"neighbor_k", c.neighbor_k},
           {"rerank_pool", c.rerank_pool}};
}

void from_json(const json& j, NetworkConfig& c) {
  static const std::set<std::string> known{
      "k_init",          "tau",       "buffer_capacity", "update_size",    "embedding_dim",
      "seed",            "variant",   "backend",         "split_threshold", "merge_threshold",
      "max_rules",       "max_attributes", "neighbor_k", "rerank_pool"};
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "network config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
  }
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  opt("k_init", c.k_init);
  opt("tau", c.tau);
  opt("buffer_capacity", c.buffer_capacity);
  opt("update_size", c.update_size);
  opt("embedding_dim", c.embedding_dim);
  opt("seed", c.seed);
  if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
  if (j.contains("backend")) c.backend = parse_backend_kind(j.at("backend").get<std::string>());
  opt("split_threshold", c.split_threshold);
  opt("merge_threshold", c.merge_threshold);
  opt("max_rules", c.max_rules);
  opt("max_attributes", c.max_attributes);
  opt("neighbor_k", c.neighbor_k);
  opt("rerank_pool", c.rerank_pool);
}

}  // namespace recnet

namespace nlohmann {

recnet::Attribute adl_serializer<recnet::Attribute>::from_json(const json& j) {
  const auto raw = j.get<std::string>();
  auto attr = recnet::Attribute::parse(raw);
  if (attr.text() != raw) {
    throw recnet::Error(recnet::ErrorCode::InvalidValue, "attribute '" + raw + "' is not normalized");
  }
  return attr;
}

void adl_serializer<recnet::FilterRule>::to_json(json& j, const recnet::FilterRule& r) {
  j = json{{"action", r.action == recnet::FilterAction::Allow ? "allow" : "deny"},
           {"pattern", r.pattern}};
}

recnet::FilterRule adl_serializer<recnet::FilterRule>::from_json(const json& j) {
  const auto action = recnet::require(j, "action").get<std::string>();
  if (action != "allow" && action != "deny") {
    throw recnet::Error(recnet::ErrorCode::InvalidValue, "filter action '" + action + "'");
  }
  return recnet::FilterRule{
      action == "allow" ? recnet::FilterAction::Allow : recnet::FilterAction::Deny,
      recnet::require(j, "pattern").get<recnet::Attribute>()};
}

}  // namespace nlohmann
