#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace recnet {

using RouterId = std::uint64_t;

/// Router ids start at 1; 0 marks a message that did not come from a router.
inline constexpr RouterId kNoRouter = 0;

enum class ClientKind { User, Item };

struct ClientId {
  ClientKind kind = ClientKind::User;
  std::string raw;

  static ClientId user(std::string raw) { return {ClientKind::User, std::move(raw)}; }
  static ClientId item(std::string raw) { return {ClientKind::Item, std::move(raw)}; }

  bool is_user() const { return kind == ClientKind::User; }
  bool is_item() const { return kind == ClientKind::Item; }

  // "user:<raw>" or "item:<raw>"
  std::string key() const;

  friend auto operator<=>(const ClientId&, const ClientId&) = default;
  friend bool operator==(const ClientId&, const ClientId&) = default;
};

/// A normalized preference keyword. Construction goes through normalization,
/// so every instance is already in canonical form.
class Attribute {
 public:
  // Throws Error(EmptyAfterNormalization).
  static Attribute parse(std::string_view raw);
  static std::optional<Attribute> try_parse(std::string_view raw);

  const std::string& text() const { return text_; }

  friend auto operator<=>(const Attribute&, const Attribute&) = default;
  friend bool operator==(const Attribute&, const Attribute&) = default;

 private:
  explicit Attribute(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

using AttributeSet = std::set<Attribute>;

Attribute normalize_attribute(std::string_view raw);

AttributeSet to_attribute_set(const std::vector<std::string>& tokens);

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  bool is_zero() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

struct PropagatedMessage {
  RouterId router_id = kNoRouter;
  // Set for point-to-point messages (router-less propagation variants).
  std::optional<ClientId> source_client;
  std::string router_profile;
  AttributeSet router_attributes;
  std::uint64_t seq = 0;

  friend bool operator==(const PropagatedMessage&, const PropagatedMessage&) = default;
};

/// Bounded LIFO cache of propagated messages, newest first. Pushing onto a
/// full buffer evicts the oldest entry.
class MessageBuffer {
 public:
  explicit MessageBuffer(std::size_t capacity = 5);

  // Unchecked; used by deserialization and by tests that need broken state.
  static MessageBuffer from_parts(std::size_t capacity,
                                  std::deque<PropagatedMessage> entries,
                                  std::uint64_t next_seq);

  // Assigns the next client-local sequence number to msg.
  void push(PropagatedMessage msg);
  void clear() { entries_.clear(); }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<PropagatedMessage>& entries() const { return entries_; }
  std::uint64_t next_seq() const { return next_seq_; }

  friend bool operator==(const MessageBuffer&, const MessageBuffer&) = default;

 private:
  std::size_t capacity_;
  std::deque<PropagatedMessage> entries_;
  std::uint64_t next_seq_ = 1;
};

enum class FilterAction { Allow, Deny };

struct FilterRule {
  FilterAction action;
  Attribute pattern;

  std::string render() const;  // "allow:<pattern>" / "deny:<pattern>"
  friend bool operator==(const FilterRule&, const FilterRule&) = default;
};

struct FilterMemory {
  std::vector<FilterRule> rules;
  std::size_t max_rules = 16;

  // Appends unless an identical rule exists; evicts the oldest when full.
  // Returns false for a duplicate.
  bool add(const FilterRule& rule);
  bool denies(const Attribute& token) const;
  bool allows(const Attribute& token) const;
  std::string render() const;  // one rule per line

  friend bool operator==(const FilterMemory&, const FilterMemory&) = default;
};

struct ClientAgent {
  ClientId id;
  std::string profile;
  AttributeSet attributes;
  MessageBuffer buffer;
  FilterMemory filter_memory;
  std::uint64_t interaction_count = 0;

  friend bool operator==(const ClientAgent&, const ClientAgent&) = default;
};

struct RouterAgent {
  RouterId id = kNoRouter;
  std::string profile;
  AttributeSet attributes;
  EmbeddingVector embedding;
  std::uint64_t generation = 0;

  friend bool operator==(const RouterAgent&, const RouterAgent&) = default;
};

struct InteractionRecord {
  ClientId user;
  ClientId positive;
  ClientId negative;
  std::int64_t timestamp = 0;

  // Throws Error(InvalidValue) when the record breaks its invariants.
  void validate() const;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

struct ModuleRef {
  enum class Kind { ClientProfile, FilterMem, Router };

  Kind kind = Kind::ClientProfile;
  std::optional<ClientId> client;
  RouterId router = kNoRouter;

  static ModuleRef profile_of(ClientId id) { return {Kind::ClientProfile, std::move(id), kNoRouter}; }
  static ModuleRef filter_of(ClientId id) { return {Kind::FilterMem, std::move(id), kNoRouter}; }
  static ModuleRef router_of(RouterId id) { return {Kind::Router, std::nullopt, id}; }

  std::string describe() const;

  friend auto operator<=>(const ModuleRef&, const ModuleRef&) = default;
  friend bool operator==(const ModuleRef&, const ModuleRef&) = default;
};

struct TextualGradient {
  ModuleRef module_ref;
  std::string reward_text;
  std::string gradient_text;

  friend bool operator==(const TextualGradient&, const TextualGradient&) = default;
};

enum class Variant {
  Full,
  NoCprEm,
  EmLr,
  EmLrLs,
  NoPpr,
  NoBuffer,
  NoFilter,
  NoFpo,
  NoOptFilter,
  NoOptRouter,
  NoAsync,
  NoRouter,
};

std::string_view to_string(Variant v);
// Throws Error(UnknownVariant).
Variant parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();

enum class BackendKind { Mock, Http };

std::string_view to_string(BackendKind b);
BackendKind parse_backend_kind(std::string_view name);

struct NetworkConfig {
  std::uint32_t k_init = 20;
  double tau = 0.8;
  std::uint32_t buffer_capacity = 5;
  std::uint32_t update_size = 16;
  std::uint32_t embedding_dim = 256;
  std::uint64_t seed = 0;
  Variant variant = Variant::Full;
  BackendKind backend = BackendKind::Mock;
  std::uint32_t split_threshold = 24;
  double merge_threshold = 0.92;
  std::uint32_t max_rules = 16;
  std::uint32_t max_attributes = 32;
  // Router-less variants: neighbours retrieved per updated client, and the
  // wider pool handed to the reranker.
  std::uint32_t neighbor_k = 5;
  std::uint32_t rerank_pool = 10;

  // Throws Error(ConfigError) on the first broken invariant.
  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

}  // namespace recnet
