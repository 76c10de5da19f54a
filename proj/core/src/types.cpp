#include "recnet/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "recnet/error.hpp"
#include "recnet/text.hpp"

namespace recnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyAfterNormalization: return "EmptyAfterNormalization";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::UnparseableChoice: return "UnparseableChoice";
    case ErrorCode::MalformedGradient: return "MalformedGradient";
    case ErrorCode::UnparseableDecision: return "UnparseableDecision";
    case ErrorCode::NoAttributes: return "NoAttributes";
    case ErrorCode::NoRouters: return "NoRouters";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::UnknownVariant: return "UnknownVariant";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UserTooShort: return "UserTooShort";
    case ErrorCode::TruthMissing: return "TruthMissing";
    case ErrorCode::MissingReport: return "MissingReport";
    case ErrorCode::GoldenMismatch: return "GoldenMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::InvalidValue: return "InvalidValue";
  }
  return "Unknown";
}

std::string ClientId::key() const {
  return (kind == ClientKind::User ? "user:" : "item:") + raw;
}

Attribute Attribute::parse(std::string_view raw) {
  auto attr = try_parse(raw);
  if (!attr) {
    throw Error(ErrorCode::EmptyAfterNormalization,
                "'" + std::string(raw) + "' has no letters or digits");
  }
  return *std::move(attr);
}

std::optional<Attribute> Attribute::try_parse(std::string_view raw) {
  std::string norm = text::normalize(raw);
  if (norm.empty()) return std::nullopt;
  return Attribute(std::move(norm));
}

Attribute normalize_attribute(std::string_view raw) { return Attribute::parse(raw); }

AttributeSet to_attribute_set(const std::vector<std::string>& tokens) {
  AttributeSet out;
  for (const auto& token : tokens) {
    if (auto attr = Attribute::try_parse(token)) out.insert(*std::move(attr));
  }
  return out;
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

bool EmbeddingVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

MessageBuffer::MessageBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw Error(ErrorCode::InvalidValue, "buffer capacity must be positive");
  }
}

MessageBuffer MessageBuffer::from_parts(std::size_t capacity,
                                        std::deque<PropagatedMessage> entries,
                                        std::uint64_t next_seq) {
  MessageBuffer buffer(capacity);
  buffer.entries_ = std::move(entries);
  buffer.next_seq_ = next_seq;
  return buffer;
}

void MessageBuffer::push(PropagatedMessage msg) {
  msg.seq = next_seq_++;
  entries_.push_front(std::move(msg));
  while (entries_.size() > capacity_) entries_.pop_back();
}

std::string FilterRule::render() const {
  return (action == FilterAction::Allow ? "allow:" : "deny:") + pattern.text();
}

bool FilterMemory::add(const FilterRule& rule) {
  if (std::find(rules.begin(), rules.end(), rule) != rules.end()) return false;
  rules.push_back(rule);
  while (rules.size() > max_rules) rules.erase(rules.begin());
  return true;
}

bool FilterMemory::denies(const Attribute& token) const {
  return std::any_of(rules.begin(), rules.end(), [&](const FilterRule& r) {
    return r.action == FilterAction::Deny && r.pattern == token;
  });
}

bool FilterMemory::allows(const Attribute& token) const {
  return std::any_of(rules.begin(), rules.end(), [&](const FilterRule& r) {
    return r.action == FilterAction::Allow && r.pattern == token;
  });
}

std::string FilterMemory::render() const {
  std::string out;
  for (const auto& rule : rules) {
    if (!out.empty()) out += '\n';
    out += rule.render();
  }
  return out;
}

void InteractionRecord::validate() const {
  if (!user.is_user()) throw Error(ErrorCode::InvalidValue, "record user must be a user id");
  if (!positive.is_item() || !negative.is_item()) {
    throw Error(ErrorCode::InvalidValue, "record candidates must be item ids");
  }
  if (positive == negative) {
    throw Error(ErrorCode::InvalidValue, "positive and negative item are identical: " + positive.raw);
  }
  if (user.raw.empty() || positive.raw.empty() || negative.raw.empty()) {
    throw Error(ErrorCode::InvalidValue, "empty client id in record");
  }
}

std::string ModuleRef::describe() const {
  switch (kind) {
    case Kind::ClientProfile: return "profile(" + (client ? client->key() : "?") + ")";
    case Kind::FilterMem: return "filter(" + (client ? client->key() : "?") + ")";
    case Kind::Router: return "router(" + std::to_string(router) + ")";
  }
  return "?";
}

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 12> kVariantNames{{
    {Variant::Full, "full"},
    {Variant::NoCprEm, "no_cpr_em"},
    {Variant::EmLr, "em_lr"},
    {Variant::EmLrLs, "em_lr_ls"},
    {Variant::NoPpr, "no_ppr"},
    {Variant::NoBuffer, "no_buffer"},
    {Variant::NoFilter, "no_filter"},
    {Variant::NoFpo, "no_fpo"},
    {Variant::NoOptFilter, "no_opt_filter"},
    {Variant::NoOptRouter, "no_opt_router"},
    {Variant::NoAsync, "no_async"},
    {Variant::NoRouter, "no_router"},
}};

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return name;
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (const auto& [variant, known] : kVariantNames) {
    if (known == name) return variant;
  }
  throw Error(ErrorCode::UnknownVariant, std::string(name));
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants = [] {
    std::vector<Variant> out;
    for (const auto& entry : kVariantNames) out.push_back(entry.first);
    return out;
  }();
  return variants;
}

std::string_view to_string(BackendKind b) { return b == BackendKind::Mock ? "mock" : "http"; }

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "mock") return BackendKind::Mock;
  if (name == "http") return BackendKind::Http;
  throw Error(ErrorCode::ConfigError, "unknown backend '" + std::string(name) + "'");
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (k_init < 1) fail("k_init must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) fail("tau must lie in (0,1)");
  if (buffer_capacity < 1) fail("buffer_capacity must be >= 1");
  if (update_size < 1) fail("update_size must be >= 1");
  if (embedding_dim < 8) fail("embedding_dim must be >= 8");
  if (split_threshold < 1) fail("split_threshold must be >= 1");
  if (!(merge_threshold > 0.0 && merge_threshold < 1.0)) fail("merge_threshold must lie in (0,1)");
  if (max_rules < 1) fail("max_rules must be >= 1");
  if (max_attributes < 1) fail("max_attributes must be >= 1");
  if (neighbor_k < 1) fail("neighbor_k must be >= 1");
  if (rerank_pool < neighbor_k) fail("rerank_pool must be >= neighbor_k");
}

}  // namespace recnet
