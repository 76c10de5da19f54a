#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recnet/embedding.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/types.hpp"

namespace recnet {

using ClientMap = std::map<ClientId, ClientAgent>;

struct AttributeDiff {
  ClientId client;
  AttributeSet added;

  friend bool operator==(const AttributeDiff&, const AttributeDiff&) = default;
};

struct RoutingTable {
  std::map<std::pair<RouterId, ClientId>, double> scores;
  double tau = 0.8;
  std::uint64_t built_at = 0;
};

struct Delivery {
  std::uint64_t batch = 0;
  RouterId router = kNoRouter;
  ClientId client;
  double score = 0.0;

  friend bool operator==(const Delivery&, const Delivery&) = default;
};

/// Hands out router ids. Ids are never reused.
class RouterIdAllocator {
 public:
  explicit RouterIdAllocator(RouterId next = 1) : next_(next) {}
  RouterId take() { return next_++; }
  RouterId peek() const { return next_; }

 private:
  RouterId next_;
};

/// Clustering coordinates for attributes. A single hash-embedded token is
/// orthogonal to every other token, so attributes are placed by the profiles
/// they occur in: the point for `a` is the normalized sum of embed(P_c) over
/// clients with a ∈ A_c. Attributes seen in no profile fall back to embed(a).
class AttributeContext {
 public:
  AttributeContext(const ClientMap& clients, const EmbeddingBackend& embedder);
  AttributeContext(std::span<const ClientAgent> clients, const EmbeddingBackend& embedder);

  EmbeddingVector point(const Attribute& a) const;

 private:
  void add(const ClientAgent& c);

  const EmbeddingBackend& embedder_;
  std::map<Attribute, std::vector<double>> sums_;
};

/// Deterministic k-means over unit vectors. Farthest-point seeding from a
/// seeded first pick, at most 50 Lloyd iterations or until every centroid
/// moves less than 1e-6, empty clusters reseeded at the worst-fit point.
/// Returns a cluster index per point; when points.size() <= k every point
/// gets its own cluster.
std::vector<std::size_t> kmeans_assign(std::span<const EmbeddingVector> points, std::size_t k,
                                       std::uint64_t seed);

// Throws Error(NoAttributes) when no client has attributes.
std::vector<RouterAgent> init_routers(const ClientMap& clients, std::uint32_t k, PromptBackend& backend,
                                      const EmbeddingBackend& embedder, std::uint64_t seed,
                                      RouterIdAllocator& ids);

// Builds a router from an attribute set: P_R = summarize("", A_R).
RouterAgent make_router(RouterId id, AttributeSet attrs, PromptBackend& backend,
                        const EmbeddingBackend& embedder, std::uint64_t generation = 0);

// Replaces A_c with extract(new_profile); returns the added attributes, if any.
std::optional<AttributeDiff> diff_attributes(ClientAgent& client, std::string_view new_profile,
                                             PromptBackend& backend);

// argmax cosine(embed(a), e_R), ties to the smallest id. Throws NoRouters.
RouterId route_attribute(const Attribute& a, std::span<const RouterAgent> routers,
                         const EmbeddingBackend& embedder);

/// Routes every added attribute and summarizes each receiving router once.
/// Returns the ids of routers that received attributes, ascending. On a
/// backend error `routers` is left unchanged.
std::vector<RouterId> integrate_batch(std::span<const AttributeDiff> diffs, std::vector<RouterAgent>& routers,
                                      PromptBackend& backend, const EmbeddingBackend& embedder);

// cos(e_R, embed(P_c)) times [A_R ∩ A_c ≠ ∅]; cold clients skip the indicator.
double score(const RouterAgent& router, const ClientAgent& client, const EmbeddingBackend& embedder,
             bool cold);
double score_with(const RouterAgent& router, const ClientAgent& client, const EmbeddingVector& client_embedding,
                  bool cold);

bool is_cold(const ClientAgent& c);

// Scores every (updated router, client) pair. Cold means interaction_count == 0.
RoutingTable build_routing_table(std::span<const RouterId> updated, std::span<const RouterAgent> routers,
                                 const ClientMap& clients, const EmbeddingBackend& embedder, double tau,
                                 std::uint64_t batch);

/// Pushes the router message into every client whose score is strictly
/// above tau, at most once per (router, client) per call. Deliveries are
/// ordered by (router id, client id).
std::vector<Delivery> multicast(std::span<const RouterId> updated, std::span<const RouterAgent> routers,
                                ClientMap& clients, const RoutingTable& table);

PropagatedMessage message_from(const RouterAgent& router);

// {"batch","router","client","score"}, one object per line.
std::string render_delivery_log(std::span<const Delivery> deliveries);

const RouterAgent* find_router(std::span<const RouterAgent> routers, RouterId id);
RouterAgent* find_router(std::vector<RouterAgent>& routers, RouterId id);

}  // namespace recnet
