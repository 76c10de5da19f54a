#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "recnet/embedding.hpp"
#include "recnet/gradient.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/routing.hpp"
#include "recnet/types.hpp"

namespace recnet {

// 1 iff chosen == positive.
int compute_reward(const ClientId& chosen, const ClientId& positive);

struct FeedbackRecord {
  InteractionRecord record;
  std::uint64_t record_index = 0;
  ClientId chosen;
  int reward = 0;
  // False when the predict reply could not be parsed; reward is then 0.
  bool parsed = true;
  std::vector<ModuleRef> involved_modules;
  std::set<RouterId> contributing_routers;

  friend bool operator==(const FeedbackRecord&, const FeedbackRecord&) = default;
};

struct ModuleContent {
  std::string content;
  AttributeSet attributes;
};

using ModuleResolver = std::function<ModuleContent(const ModuleRef&)>;

// One gradient prompt per involved module, in involved_modules order.
std::vector<TextualGradient> assign_credit(const FeedbackRecord& feedback, const InteractionContext& context,
                                           const ModuleResolver& resolve, PromptBackend& backend);

struct ClientUpdateOptions {
  bool profiles = true;
  bool filters = true;
};

struct ClientUpdateResult {
  std::vector<AttributeDiff> diffs;
  std::vector<ClientId> profile_updates;  // clients whose stored profile changed
  std::size_t profile_optimizer_calls = 0;
  std::size_t filter_optimizer_calls = 0;
  std::vector<std::string> warnings;
};

/// Applies profile and filter gradients. A gradient with no applicable
/// directive costs no optimizer call. Profile rewrites are re-extracted and
/// their attribute diffs returned for the next router stage. Router-targeted
/// gradients are ignored.
ClientUpdateResult optimize_client_modules(std::span<const TextualGradient> gradients, ClientMap& clients,
                                           PromptBackend& backend, const ClientUpdateOptions& options = {});

AggregatedGradient aggregate_router_gradients(const RouterAgent& router,
                                              std::span<const PendingRouterGradient> gradients);

RouterDecision decide_router_action(const RouterAgent& router, const AggregatedGradient& aggregated,
                                    std::span<const RouterAgent> routers, PromptBackend& backend);

/// One applied router decision. children are routers created, retired are
/// routers removed and revised is a router changed in place (the rewritten
/// router or the merge survivor), so K moves by |children| - |retired|.
struct LineageEntry {
  std::uint64_t batch = 0;
  RouterId router = kNoRouter;
  RouterDecision::Action action = RouterDecision::Action::NoOp;
  std::vector<RouterId> children;
  std::vector<RouterId> retired;
  RouterId revised = kNoRouter;
  std::size_t k_after = 0;

  friend bool operator==(const LineageEntry&, const LineageEntry&) = default;
};

// {"batch","router","action","children","retired","revised","k_after"} per line.
std::string render_lineage_log(std::span<const LineageEntry> entries);

struct RouterEvolution {
  PromptBackend& backend;
  const EmbeddingBackend& embedder;
  const AttributeContext& context;
  RouterIdAllocator& ids;
  std::uint32_t split_threshold = 24;
  std::uint64_t batch = 0;
  std::uint64_t seed = 0;
};

/// Partitions attrs by repeated 2-means over context points until every part
/// holds at most split_threshold attributes. The first cut always happens
/// when attrs has two or more elements.
std::vector<AttributeSet> split_attributes(const AttributeSet& attrs, const AttributeContext& context,
                                           std::uint32_t split_threshold, std::uint64_t seed);

/// Applies one decision to `routers`. Split with fewer than two attributes
/// becomes Rewrite. Merge keeps the smaller id. Rewrite applies the
/// aggregated add/remove directives (adds stop at split_threshold) and
/// re-summarizes; a rewrite that removes every attribute retires the router
/// unless it is the last one. Returns the lineage entry, or nothing for NoOp
/// and for decisions that no longer apply.
std::optional<LineageEntry> apply_router_decision(std::vector<RouterAgent>& routers, RouterId id,
                                                  const RouterDecision& decision,
                                                  const AggregatedGradient& aggregated, RouterEvolution& ctx,
                                                  std::vector<std::string>& warnings);

}  // namespace recnet
