#include "recnet/routing.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "recnet/error.hpp"
#include "recnet/random.hpp"
#include "recnet/serialization.hpp"

namespace recnet {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

AttributeContext::AttributeContext(const ClientMap& clients, const EmbeddingBackend& embedder)
    : embedder_(embedder) {
  for (const auto& [_, c] : clients) add(c);
}

AttributeContext::AttributeContext(std::span<const ClientAgent> clients, const EmbeddingBackend& embedder)
    : embedder_(embedder) {
  for (const auto& c : clients) add(c);
}

void AttributeContext::add(const ClientAgent& c) {
  if (c.attributes.empty()) return;
  const EmbeddingVector e = embedder_.embed(c.profile);
  if (e.is_zero()) return;
  for (const auto& a : c.attributes) {
    auto& sum = sums_[a];
    if (sum.empty()) sum.assign(e.dim(), 0.0);
    for (std::size_t i = 0; i < e.dim(); ++i) sum[i] += e.values[i];
  }
}

EmbeddingVector AttributeContext::point(const Attribute& a) const {
  if (auto it = sums_.find(a); it != sums_.end()) {
    EmbeddingVector v = unit_normalize(it->second);
    if (!v.is_zero()) return v;
  }
  return embedder_.embed(a.text());
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> kmeans_assign(std::span<const EmbeddingVector> points, std::size_t k,
                                       std::uint64_t seed) {
  const std::size_t n = points.size();
  std::vector<std::size_t> assign(n, 0);
  if (n == 0 || k == 0) return assign;
  if (n <= k) {
    for (std::size_t i = 0; i < n; ++i) assign[i] = i;
    return assign;
  }

  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  std::vector<bool> is_center(n, false);
  std::size_t first = static_cast<std::size_t>(uniform_index(rng, n));
  centers.push_back(points[first].values);
  is_center[first] = true;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points[i].values, centers.back()));
      if (!is_center[i] && nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    is_center[best] = true;
    centers.push_back(points[best].values);
  }

  const std::size_t dim = points[0].dim();
  for (int iter = 0; iter < 50; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(points[i].values, centers[c]);
        if (d < best_d) {
          best_d = d;
          assign[i] = c;
        }
      }
    }

    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) next[assign[i]][d] += points[i].values[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (double& x : next[c]) x /= static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Reseed at the point farthest from its own centroid, taken from a
      // cluster that can spare it.
      std::size_t worst = n;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] < 2) continue;
        const double d = sq_dist(points[i].values, next[assign[i]]);
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      if (worst == n) continue;
      --counts[assign[worst]];
      assign[worst] = c;
      counts[c] = 1;
      next[c] = points[worst].values;
    }

    double moved = 0.0;
    for (std::size_t c = 0; c < k; ++c) moved = std::max(moved, sq_dist(centers[c], next[c]));
    centers = std::move(next);
    if (moved < 1e-12) break;  // movement below 1e-6
  }

  // Final assignment against the settled centroids, then relabel clusters in
  // order of first appearance.
  for (std::size_t i = 0; i < n; ++i) {
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(points[i].values, centers[c]);
      if (d < best_d) {
        best_d = d;
        assign[i] = c;
      }
    }
  }
  std::vector<std::size_t> label(k, n);
  std::size_t next_label = 0;
  for (auto& a : assign) {
    if (label[a] == n) label[a] = next_label++;
    a = label[a];
  }
  return assign;
}

RouterAgent make_router(RouterId id, AttributeSet attrs, PromptBackend& backend,
                        const EmbeddingBackend& embedder, std::uint64_t generation) {
  RouterAgent r;
  r.id = id;
  r.profile = backend.summarize("", attrs);
  r.attributes = std::move(attrs);
  r.embedding = embedder.embed(r.profile);
  r.generation = generation;
  return r;
}

std::vector<RouterAgent> init_routers(const ClientMap& clients, std::uint32_t k, PromptBackend& backend,
                                      const EmbeddingBackend& embedder, std::uint64_t seed,
                                      RouterIdAllocator& ids) {
  if (k == 0) throw Error(ErrorCode::InvalidValue, "k must be >= 1");
  AttributeSet all;
  for (const auto& [_, c] : clients) all.insert(c.attributes.begin(), c.attributes.end());
  if (all.empty()) throw Error(ErrorCode::NoAttributes, "no client has any attribute");

  const std::vector<Attribute> attrs(all.begin(), all.end());
  const AttributeContext context(clients, embedder);
  std::vector<EmbeddingVector> points;
  points.reserve(attrs.size());
  for (const auto& a : attrs) points.push_back(context.point(a));

  const auto assign = kmeans_assign(points, k, seed);
  const std::size_t groups = *std::max_element(assign.begin(), assign.end()) + 1;
  std::vector<AttributeSet> members(groups);
  for (std::size_t i = 0; i < attrs.size(); ++i) members[assign[i]].insert(attrs[i]);

  std::vector<RouterAgent> routers;
  routers.reserve(groups);
  for (auto& m : members) {
    if (m.empty()) continue;
    routers.push_back(make_router(ids.take(), std::move(m), backend, embedder));
  }
  return routers;
}

std::optional<AttributeDiff> diff_attributes(ClientAgent& client, std::string_view new_profile,
                                             PromptBackend& backend) {
  AttributeSet fresh = backend.extract(new_profile);
  AttributeDiff diff{client.id, {}};
  std::set_difference(fresh.begin(), fresh.end(), client.attributes.begin(), client.attributes.end(),
                      std::inserter(diff.added, diff.added.end()));
  client.attributes = std::move(fresh);
  if (diff.added.empty()) return std::nullopt;
  return diff;
}

RouterId route_attribute(const Attribute& a, std::span<const RouterAgent> routers,
                         const EmbeddingBackend& embedder) {
  if (routers.empty()) throw Error(ErrorCode::NoRouters, "cannot route '" + a.text() + "'");
  const EmbeddingVector e = embedder.embed(a.text());
  RouterId best = kNoRouter;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (const auto& r : routers) {
    const double s = cosine(e, r.embedding);
    if (s > best_sim || (s == best_sim && r.id < best)) {
      best_sim = s;
      best = r.id;
    }
  }
  return best;
}

std::vector<RouterId> integrate_batch(std::span<const AttributeDiff> diffs, std::vector<RouterAgent>& routers,
                                      PromptBackend& backend, const EmbeddingBackend& embedder) {
  std::map<RouterId, AttributeSet> routed;
  for (const auto& d : diffs) {
    for (const auto& a : d.added) routed[route_attribute(a, routers, embedder)].insert(a);
  }
  if (routed.empty()) return {};

  std::vector<RouterAgent> next = routers;
  std::vector<RouterId> touched;
  for (auto& [id, attrs] : routed) {
    RouterAgent* r = find_router(next, id);
    r->profile = backend.summarize(r->profile, attrs);
    r->attributes.insert(attrs.begin(), attrs.end());
    r->embedding = embedder.embed(r->profile);
    ++r->generation;
    touched.push_back(id);
  }
  routers = std::move(next);
  return touched;
}

bool is_cold(const ClientAgent& c) { return c.interaction_count == 0; }

double score_with(const RouterAgent& router, const ClientAgent& client, const EmbeddingVector& client_embedding,
                  bool cold) {
  if (!cold) {
    const bool overlap = std::any_of(router.attributes.begin(), router.attributes.end(),
                                     [&](const Attribute& a) { return client.attributes.count(a) > 0; });
    if (!overlap) return 0.0;
  }
  return cosine(router.embedding, client_embedding);
}

double score(const RouterAgent& router, const ClientAgent& client, const EmbeddingBackend& embedder,
             bool cold) {
  return score_with(router, client, embedder.embed(client.profile), cold);
}

RoutingTable build_routing_table(std::span<const RouterId> updated, std::span<const RouterAgent> routers,
                                 const ClientMap& clients, const EmbeddingBackend& embedder, double tau,
                                 std::uint64_t batch) {
  RoutingTable table;
  table.tau = tau;
  table.built_at = batch;
  if (updated.empty()) return table;
  std::vector<std::pair<const ClientAgent*, EmbeddingVector>> embedded;
  embedded.reserve(clients.size());
  for (const auto& [_, c] : clients) embedded.emplace_back(&c, embedder.embed(c.profile));
  for (RouterId id : updated) {
    const RouterAgent* r = find_router(routers, id);
    if (!r) continue;
    for (const auto& [c, e] : embedded) table.scores[{id, c->id}] = score_with(*r, *c, e, is_cold(*c));
  }
  return table;
}

PropagatedMessage message_from(const RouterAgent& router) {
  PropagatedMessage m;
  m.router_id = router.id;
  m.router_profile = router.profile;
  m.router_attributes = router.attributes;
  return m;
}

std::vector<Delivery> multicast(std::span<const RouterId> updated, std::span<const RouterAgent> routers,
                                ClientMap& clients, const RoutingTable& table) {
  std::vector<Delivery> log;
  const std::set<RouterId> ids(updated.begin(), updated.end());
  for (RouterId id : ids) {
    const RouterAgent* r = find_router(routers, id);
    if (!r) continue;
    const PropagatedMessage msg = message_from(*r);
    for (auto& [cid, client] : clients) {
      const auto it = table.scores.find({id, cid});
      if (it == table.scores.end() || !(it->second > table.tau)) continue;
      client.buffer.push(msg);
      log.push_back({table.built_at, id, cid, it->second});
    }
  }
  return log;
}

std::string render_delivery_log(std::span<const Delivery> deliveries) {
  std::string out;
  for (const auto& d : deliveries) {
    out += json{{"batch", d.batch}, {"router", d.router}, {"client", d.client.key()}, {"score", d.score}}.dump();
    out += '\n';
  }
  return out;
}

const RouterAgent* find_router(std::span<const RouterAgent> routers, RouterId id) {
  for (const auto& r : routers) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

RouterAgent* find_router(std::vector<RouterAgent>& routers, RouterId id) {
  for (auto& r : routers) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

}  // namespace recnet
