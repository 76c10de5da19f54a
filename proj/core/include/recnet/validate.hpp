#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recnet/embedding.hpp"
#include "recnet/routing.hpp"
#include "recnet/types.hpp"

namespace recnet {

enum class ViolationKind {
  EmptyClientId,
  BufferOverCapacity,
  BufferOrder,
  FilterOverCapacity,
  AttributeMismatch,
  DuplicateRouterId,
  EmptyRouterAttributes,
  StaleRouterEmbedding,
  EmbeddingNotUnit,
  InvalidConfig,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct ValidateOptions {
  // Re-extract every client profile with the mock rules and compare against
  // the stored attribute set. Only meaningful for mock-backed networks.
  bool check_attributes = true;
  std::size_t max_attributes = 32;
};

/// Every broken invariant of the network; empty means consistent.
std::vector<Violation> validate_network(const ClientMap& clients, std::span<const RouterAgent> routers,
                                        const NetworkConfig& config, const EmbeddingBackend& embedder,
                                        const ValidateOptions& options = {});

}  // namespace recnet
