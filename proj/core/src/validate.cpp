#include "recnet/validate.hpp"

#include <cmath>
#include <set>

#include "recnet/error.hpp"
#include "recnet/prompt_backend.hpp"

namespace recnet {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyClientId: return "EmptyClientId";
    case ViolationKind::BufferOverCapacity: return "BufferOverCapacity";
    case ViolationKind::BufferOrder: return "BufferOrder";
    case ViolationKind::FilterOverCapacity: return "FilterOverCapacity";
    case ViolationKind::AttributeMismatch: return "AttributeMismatch";
    case ViolationKind::DuplicateRouterId: return "DuplicateRouterId";
    case ViolationKind::EmptyRouterAttributes: return "EmptyRouterAttributes";
    case ViolationKind::StaleRouterEmbedding: return "StaleRouterEmbedding";
    case ViolationKind::EmbeddingNotUnit: return "EmbeddingNotUnit";
    case ViolationKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {

bool unit_or_zero(const EmbeddingVector& v) {
  if (v.is_zero()) return true;
  const double n = v.norm();
  return std::isfinite(n) && std::abs(n - 1.0) <= 1e-6;
}

}  // namespace

std::vector<Violation> validate_network(const ClientMap& clients, std::span<const RouterAgent> routers,
                                        const NetworkConfig& config, const EmbeddingBackend& embedder,
                                        const ValidateOptions& options) {
  std::vector<Violation> out;
  try {
    config.validate();
  } catch (const Error& e) {
    out.push_back({ViolationKind::InvalidConfig, e.what()});
  }

  for (const auto& [id, c] : clients) {
    const std::string key = id.key();
    if (id.raw.empty()) out.push_back({ViolationKind::EmptyClientId, key});
    const auto& entries = c.buffer.entries();
    if (entries.size() > c.buffer.capacity()) {
      out.push_back({ViolationKind::BufferOverCapacity, key + " holds " + std::to_string(entries.size()) +
                                                            " > " + std::to_string(c.buffer.capacity())});
    }
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (entries[i - 1].seq <= entries[i].seq) {
        out.push_back({ViolationKind::BufferOrder, key + " at position " + std::to_string(i)});
        break;
      }
    }
    if (c.filter_memory.rules.size() > c.filter_memory.max_rules) {
      out.push_back({ViolationKind::FilterOverCapacity, key});
    }
    if (options.check_attributes && mock_extract(c.profile, options.max_attributes) != c.attributes) {
      out.push_back({ViolationKind::AttributeMismatch, key});
    }
  }

  std::set<RouterId> seen;
  for (const auto& r : routers) {
    const std::string name = "router " + std::to_string(r.id);
    if (!seen.insert(r.id).second) out.push_back({ViolationKind::DuplicateRouterId, name});
    if (r.attributes.empty()) out.push_back({ViolationKind::EmptyRouterAttributes, name});
    if (!unit_or_zero(r.embedding)) out.push_back({ViolationKind::EmbeddingNotUnit, name});
    if (r.embedding != embedder.embed(r.profile)) out.push_back({ViolationKind::StaleRouterEmbedding, name});
  }
  return out;
}

}  // namespace recnet
