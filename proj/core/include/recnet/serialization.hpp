#pragma once

// JSON (de)serialization for the domain types. Field names follow the
// snake_case names of the struct members.

#include <nlohmann/json.hpp>

#include "recnet/types.hpp"

namespace recnet {

using json = nlohmann::json;

void to_json(json& j, const ClientId& id);
void from_json(const json& j, ClientId& id);

void to_json(json& j, const EmbeddingVector& v);
void from_json(const json& j, EmbeddingVector& v);

void to_json(json& j, const PropagatedMessage& m);
void from_json(const json& j, PropagatedMessage& m);

void to_json(json& j, const MessageBuffer& b);
void from_json(const json& j, MessageBuffer& b);

void to_json(json& j, const FilterMemory& f);
void from_json(const json& j, FilterMemory& f);

void to_json(json& j, const ClientAgent& c);
void from_json(const json& j, ClientAgent& c);

void to_json(json& j, const RouterAgent& r);
void from_json(const json& j, RouterAgent& r);

void to_json(json& j, const InteractionRecord& r);
void from_json(const json& j, InteractionRecord& r);

void to_json(json& j, const ModuleRef& m);
void from_json(const json& j, ModuleRef& m);

void to_json(json& j, const TextualGradient& g);
void from_json(const json& j, TextualGradient& g);

// Unknown keys are rejected; absent keys keep their defaults.
void to_json(json& j, const NetworkConfig& c);
void from_json(const json& j, NetworkConfig& c);

// Fetches a required field or throws Error(MissingField).
const json& require(const json& j, const char* key);

}  // namespace recnet

namespace nlohmann {

template <>
struct adl_serializer<recnet::Attribute> {
  static void to_json(json& j, const recnet::Attribute& a) { j = a.text(); }
  // Rejects text that is not already in normal form.
  static recnet::Attribute from_json(const json& j);
};

template <>
struct adl_serializer<recnet::FilterRule> {
  static void to_json(json& j, const recnet::FilterRule& r);
  static recnet::FilterRule from_json(const json& j);
};

}  // namespace nlohmann
