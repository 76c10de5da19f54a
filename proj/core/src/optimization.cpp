#include "recnet/optimization.hpp"

#include <algorithm>

#include "recnet/error.hpp"
#include "recnet/serialization.hpp"

namespace recnet {

int compute_reward(const ClientId& chosen, const ClientId& positive) { return chosen == positive ? 1 : 0; }

std::vector<TextualGradient> assign_credit(const FeedbackRecord& feedback, const InteractionContext& context,
                                           const ModuleResolver& resolve, PromptBackend& backend) {
  std::vector<TextualGradient> out;
  out.reserve(feedback.involved_modules.size());
  for (const auto& m : feedback.involved_modules) {
    ModuleContent mc = resolve(m);
    out.push_back(backend.gradient(GradientRequest{m, std::move(mc.content), std::move(mc.attributes), context}));
  }
  return out;
}

ClientUpdateResult optimize_client_modules(std::span<const TextualGradient> gradients, ClientMap& clients,
                                           PromptBackend& backend, const ClientUpdateOptions& options) {
  ClientUpdateResult result;
  for (const auto& g : gradients) {
    const ModuleRef& m = g.module_ref;
    if (m.kind == ModuleRef::Kind::Router || !m.client) continue;
    auto it = clients.find(*m.client);
    if (it == clients.end()) {
      result.warnings.push_back("gradient for unknown client " + m.client->key());
      continue;
    }
    ClientAgent& client = it->second;
    auto parsed = parse_directives(g.gradient_text);
    for (auto& w : parsed.warnings) result.warnings.push_back(m.describe() + ": " + w);

    if (m.kind == ModuleRef::Kind::ClientProfile) {
      if (!options.profiles) continue;
      const bool applicable = std::any_of(parsed.directives.begin(), parsed.directives.end(),
                                          [](const Directive& d) { return d.is_profile_edit(); });
      if (!applicable) continue;
      std::string revised = backend.optimize_profile(client.profile, g.gradient_text);
      ++result.profile_optimizer_calls;
      if (revised == client.profile) continue;
      client.profile = std::move(revised);
      result.profile_updates.push_back(client.id);
      if (auto diff = diff_attributes(client, client.profile, backend)) result.diffs.push_back(*std::move(diff));
    } else {
      if (!options.filters) continue;
      const bool applicable = std::any_of(parsed.directives.begin(), parsed.directives.end(),
                                          [](const Directive& d) { return d.is_rule(); });
      if (!applicable) continue;
      client.filter_memory = backend.optimize_filter(client.filter_memory, g.gradient_text);
      ++result.filter_optimizer_calls;
    }
  }
  return result;
}

AggregatedGradient aggregate_router_gradients(const RouterAgent& router,
                                              std::span<const PendingRouterGradient> gradients) {
  AggregatedGradient agg;
  agg.router = router.id;
  agg.size = router.attributes.size();
  for (const auto& g : gradients) {
    agg.sources.push_back(g.provenance);
    if (g.provenance.reward == 0) ++agg.negative_count;
    auto parsed = parse_directives(g.gradient.gradient_text);
    for (auto& w : parsed.warnings) agg.warnings.push_back(std::move(w));
    for (auto& d : parsed.directives) agg.directives.emplace_back(std::move(d), g.provenance);
  }
  return agg;
}

RouterDecision decide_router_action(const RouterAgent& router, const AggregatedGradient& aggregated,
                                    std::span<const RouterAgent> routers, PromptBackend& backend) {
  return backend.decide_router(RouterView{router, aggregated, routers});
}

std::string render_lineage_log(std::span<const LineageEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += json{{"batch", e.batch},
                {"router", e.router},
                {"action", std::string(to_string(e.action))},
                {"children", e.children},
                {"retired", e.retired},
                {"revised", e.revised},
                {"k_after", e.k_after}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<AttributeSet> split_attributes(const AttributeSet& attrs, const AttributeContext& context,
                                           std::uint32_t split_threshold, std::uint64_t seed) {
  if (attrs.size() < 2) return {attrs};
  const std::vector<Attribute> list(attrs.begin(), attrs.end());
  std::vector<EmbeddingVector> points;
  points.reserve(list.size());
  for (const auto& a : list) points.push_back(context.point(a));
  const auto assign = kmeans_assign(points, 2, seed);

  AttributeSet left, right;
  for (std::size_t i = 0; i < list.size(); ++i) (assign[i] == 0 ? left : right).insert(list[i]);
  if (left.empty() || right.empty()) {
    // Indistinguishable points: cut the sorted list in half.
    left.clear();
    right.clear();
    for (std::size_t i = 0; i < list.size(); ++i) (i < list.size() / 2 ? left : right).insert(list[i]);
  }

  std::vector<AttributeSet> out;
  std::uint64_t sub = 1;
  for (auto* part : {&left, &right}) {
    if (part->size() > split_threshold) {
      for (auto& p : split_attributes(*part, context, split_threshold, seed * 31 + sub)) out.push_back(std::move(p));
    } else {
      out.push_back(std::move(*part));
    }
    ++sub;
  }
  return out;
}

namespace {

LineageEntry entry(const RouterEvolution& ctx, RouterId id, RouterDecision::Action action,
                   std::vector<RouterId> children, std::vector<RouterId> retired, RouterId revised,
                   std::size_t k_after) {
  return {ctx.batch, id, action, std::move(children), std::move(retired), revised, k_after};
}

// Returns false when every attribute was removed; the caller retires the router.
bool rewrite(RouterAgent& r, const RouterDecision& decision, const AggregatedGradient& aggregated,
             RouterEvolution& ctx, bool last_router) {
  AttributeSet revised = r.attributes;
  for (const auto& [d, _] : aggregated.directives) {
    if (!d.attr) continue;
    if (d.op == Directive::Op::Add && revised.size() < ctx.split_threshold) revised.insert(*d.attr);
    if (d.op == Directive::Op::Remove) revised.erase(*d.attr);
  }
  if (revised.empty()) {
    if (!last_router) return false;
    revised.insert(*r.attributes.begin());
  }
  r.profile = decision.payload ? *decision.payload : ctx.backend.summarize("", revised);
  r.attributes = std::move(revised);
  r.embedding = ctx.embedder.embed(r.profile);
  ++r.generation;
  return true;
}

std::optional<LineageEntry> rewrite_or_retire(std::vector<RouterAgent>& routers, RouterAgent& r,
                                              const RouterDecision& decision, const AggregatedGradient& aggregated,
                                              RouterEvolution& ctx) {
  const RouterId id = r.id;
  if (rewrite(r, decision, aggregated, ctx, routers.size() == 1)) {
    return entry(ctx, id, RouterDecision::Action::Rewrite, {}, {}, id, routers.size());
  }
  std::erase_if(routers, [&](const RouterAgent& x) { return x.id == id; });
  return entry(ctx, id, RouterDecision::Action::Rewrite, {}, {id}, kNoRouter, routers.size());
}

}  // namespace

std::optional<LineageEntry> apply_router_decision(std::vector<RouterAgent>& routers, RouterId id,
                                                  const RouterDecision& decision,
                                                  const AggregatedGradient& aggregated, RouterEvolution& ctx,
                                                  std::vector<std::string>& warnings) {
  RouterAgent* self = find_router(routers, id);
  if (!self) {
    warnings.push_back("router " + std::to_string(id) + " no longer exists; decision dropped");
    return std::nullopt;
  }
  using A = RouterDecision::Action;

  switch (decision.action) {
    case A::NoOp:
      return std::nullopt;

    case A::Rewrite:
      return rewrite_or_retire(routers, *self, decision, aggregated, ctx);

    case A::Split: {
      if (self->attributes.size() < 2) {
        warnings.push_back("router " + std::to_string(id) + ": degenerate split, rewriting instead");
        return rewrite_or_retire(routers, *self, decision, aggregated, ctx);
      }
      const auto parts = split_attributes(self->attributes, ctx.context, ctx.split_threshold,
                                          ctx.seed ^ (ctx.batch * 0x9e3779b97f4a7c15ULL) ^ id);
      const std::uint64_t generation = self->generation + 1;
      std::vector<RouterAgent> children;
      std::vector<RouterId> child_ids;
      for (const auto& p : parts) {
        children.push_back(make_router(ctx.ids.take(), p, ctx.backend, ctx.embedder, generation));
        child_ids.push_back(children.back().id);
      }
      std::erase_if(routers, [&](const RouterAgent& r) { return r.id == id; });
      for (auto& c : children) routers.push_back(std::move(c));
      return entry(ctx, id, A::Split, std::move(child_ids), {id}, kNoRouter, routers.size());
    }

    case A::Merge: {
      RouterAgent* other = find_router(routers, decision.merge_target);
      if (!other || other->id == id) {
        warnings.push_back("router " + std::to_string(id) + ": merge target " +
                           std::to_string(decision.merge_target) + " unavailable; decision dropped");
        return std::nullopt;
      }
      RouterAgent* survivor = self->id < other->id ? self : other;
      RouterAgent* retired = self->id < other->id ? other : self;
      AttributeSet incoming;
      std::set_difference(retired->attributes.begin(), retired->attributes.end(), survivor->attributes.begin(),
                          survivor->attributes.end(), std::inserter(incoming, incoming.end()));
      survivor->profile = ctx.backend.summarize(survivor->profile, incoming);
      survivor->attributes.insert(incoming.begin(), incoming.end());
      survivor->embedding = ctx.embedder.embed(survivor->profile);
      survivor->generation = std::max(survivor->generation, retired->generation) + 1;
      const RouterId survivor_id = survivor->id;
      const RouterId retired_id = retired->id;
      std::erase_if(routers, [&](const RouterAgent& r) { return r.id == retired_id; });
      return entry(ctx, id, A::Merge, {}, {retired_id}, survivor_id, routers.size());
    }
  }
  return std::nullopt;
}

}  // namespace recnet
