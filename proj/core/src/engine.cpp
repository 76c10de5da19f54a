#include "recnet/engine.hpp"

#include <algorithm>
#include <set>

#include "recnet/error.hpp"
#include "recnet/reception.hpp"

namespace recnet {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Initialization: return "initialization";
    case Stage::ClientCentric: return "client_centric";
    case Stage::RouterCentric: return "router_centric";
    case Stage::Evaluation: return "evaluation";
  }
  return "unknown";
}

std::uint64_t CallAccounting::total(Stage s) const {
  std::uint64_t t = 0;
  for (auto c : at(s)) t += c;
  return t;
}

double CallAccounting::lambda_observed() const {
  if (baseline_calls == 0) return 0.0;
  return static_cast<double>(total(Stage::ClientCentric)) / static_cast<double>(baseline_calls);
}

VariantGate VariantGate::of(Variant v) {
  VariantGate g;
  switch (v) {
    case Variant::Full: break;
    case Variant::NoCprEm:
      g.routers = false;
      g.point_to_point = true;
      break;
    case Variant::EmLr:
      g.routers = false;
      g.point_to_point = true;
      g.rerank = true;
      break;
    case Variant::EmLrLs:
      g.routers = false;
      g.point_to_point = true;
      g.rerank = true;
      g.summarize_before_send = true;
      break;
    case Variant::NoRouter:
      g.routers = false;
      g.point_to_point = true;
      g.per_step_neighbors = true;
      g.summarize_before_send = true;
      break;
    case Variant::NoPpr:
      g.buffer = false;
      g.filter = false;
      g.optimize_filter = false;
      break;
    case Variant::NoBuffer: g.buffer = false; break;
    case Variant::NoFilter:
      g.filter = false;
      g.optimize_filter = false;
      break;
    case Variant::NoFpo: g.feedback = false; break;
    case Variant::NoOptFilter: g.optimize_filter = false; break;
    case Variant::NoOptRouter: g.optimize_router = false; break;
    case Variant::NoAsync: g.async_batches = false; break;
  }
  return g;
}

// Attributes every backend call issued while alive to one stage.
class Engine::StageScope {
 public:
  StageScope(Engine& engine, Stage stage)
      : engine_(engine), stage_(stage), before_(engine.backend_.counter().snapshot()) {}
  ~StageScope() {
    const CallCounts now = engine_.backend_.counter().snapshot();
    CallCounts& bucket = engine_.accounting_.at(stage_);
    for (std::size_t i = 0; i < kPromptKindCount; ++i) bucket[i] += now[i] - before_[i];
  }
  StageScope(const StageScope&) = delete;
  StageScope& operator=(const StageScope&) = delete;

  CallCounts delta() const {
    CallCounts d{};
    const CallCounts now = engine_.backend_.counter().snapshot();
    for (std::size_t i = 0; i < kPromptKindCount; ++i) d[i] = now[i] - before_[i];
    return d;
  }

 private:
  Engine& engine_;
  Stage stage_;
  CallCounts before_;
};

Engine::Engine(NetworkConfig config, PromptBackend& backend, const EmbeddingBackend& embedder)
    : config_(std::move(config)), gate_(VariantGate::of(config_.variant)), backend_(backend), embedder_(embedder) {
  config_.validate();
  if (embedder.dim() != config_.embedding_dim) {
    throw Error(ErrorCode::ConfigError, "embedder dim " + std::to_string(embedder.dim()) +
                                            " differs from embedding_dim " + std::to_string(config_.embedding_dim));
  }
}

ClientAgent& Engine::client(const ClientId& id) {
  auto it = state_.clients.find(id);
  if (it == state_.clients.end()) throw Error(ErrorCode::InvalidValue, "unknown client " + id.key());
  return it->second;
}

void Engine::collect_warnings() {
  for (auto& w : backend_.drain_warnings()) warnings_.push_back(std::move(w));
}

void Engine::initialize(std::vector<ClientAgent> clients) {
  StageScope scope(*this, Stage::Initialization);
  state_ = EngineState{};
  for (auto& c : clients) {
    if (c.id.raw.empty()) throw Error(ErrorCode::InvalidValue, "empty client id");
    c.attributes = backend_.extract(c.profile);
    if (c.buffer.capacity() != config_.buffer_capacity) c.buffer = MessageBuffer(config_.buffer_capacity);
    c.filter_memory.max_rules = config_.max_rules;
    const ClientId id = c.id;
    if (!state_.clients.emplace(id, std::move(c)).second) {
      throw Error(ErrorCode::InvalidValue, "duplicate client " + id.key());
    }
  }
  if (gate_.routers) {
    RouterIdAllocator ids(1);
    state_.routers = init_routers(state_.clients, config_.k_init, backend_, embedder_, config_.seed, ids);
    state_.next_router_id = ids.peek();
  }
  state_.k_trajectory.push_back(state_.routers.size());
  collect_warnings();
}

void Engine::touch(const ClientId& id) {
  if (!journal_ || journal_->count(id)) return;
  journal_->emplace(id, client(id));
}

std::string Engine::merge_for_step(ClientAgent& c) {
  // Without a buffer, messages were fused into the stored profile on arrival.
  if (!gate_.buffer) return c.profile;
  const std::vector<PropagatedMessage> newest_first(c.buffer.entries().begin(), c.buffer.entries().end());
  std::string merged = backend_.merge(newest_first, gate_.filter ? c.filter_memory : FilterMemory{}, c.profile);
  c.buffer.clear();
  return merged;
}

void Engine::deliver(ClientMap& clients, const ClientId& target, PropagatedMessage msg) {
  if (&clients == &state_.clients) touch(target);
  ClientAgent& c = clients.at(target);
  if (gate_.buffer) {
    c.buffer.push(std::move(msg));
    return;
  }
  const std::vector<PropagatedMessage> one{std::move(msg)};
  c.profile = backend_.merge(one, gate_.filter ? c.filter_memory : FilterMemory{}, c.profile);
  diff_attributes(c, c.profile, backend_);
}

std::vector<ClientId> Engine::neighbours(const ClientMap& clients, const ClientAgent& source) {
  const EmbeddingVector e = embedder_.embed(source.profile);
  if (e.is_zero()) return {};
  std::vector<std::pair<double, const ClientAgent*>> scored;
  for (const auto& [id, c] : clients) {
    if (id == source.id) continue;
    const double s = cosine(e, embedder_.embed(c.profile));
    if (s > 0.0) scored.emplace_back(s, &c);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  });
  const std::size_t pool = gate_.rerank ? config_.rerank_pool : config_.neighbor_k;
  if (scored.size() > pool) scored.resize(pool);

  if (!gate_.rerank) {
    std::vector<ClientId> out;
    for (const auto& [_, c] : scored) out.push_back(c->id);
    return out;
  }
  std::vector<CandidateView> views;
  for (const auto& [_, c] : scored) views.push_back({c->id, c->profile});
  std::vector<ClientId> picked = backend_.rerank(source.profile, views, config_.neighbor_k);
  std::erase_if(picked, [&](const ClientId& id) {
    return std::none_of(views.begin(), views.end(), [&](const CandidateView& v) { return v.id == id; });
  });
  return picked;
}

std::size_t Engine::propagate_point_to_point(ClientMap& clients, const std::vector<ClientId>& sources,
                                             bool per_neighbor_summary) {
  std::size_t delivered = 0;
  for (const auto& sid : sources) {
    const ClientAgent& source = clients.at(sid);
    const auto targets = neighbours(clients, source);
    if (targets.empty()) continue;
    PropagatedMessage base;
    base.source_client = source.id;
    base.router_attributes = source.attributes;
    base.router_profile = source.profile;
    if (gate_.summarize_before_send && !per_neighbor_summary) {
      base.router_profile = backend_.summarize(source.profile, source.attributes);
    }
    // Collect every message before the first delivery so a failed call
    // leaves no partial fan-out behind.
    std::vector<std::pair<ClientId, PropagatedMessage>> out;
    for (const auto& t : targets) {
      PropagatedMessage m = base;
      if (per_neighbor_summary) m.router_profile = backend_.summarize(source.profile, source.attributes);
      out.emplace_back(t, std::move(m));
    }
    for (auto& [t, m] : out) {
      deliver(clients, t, std::move(m));
      ++delivered;
    }
  }
  return delivered;
}

FeedbackRecord Engine::step(const InteractionRecord& record) {
  record.validate();
  client(record.user);
  client(record.positive);
  client(record.negative);

  std::map<ClientId, ClientAgent> journal;
  const std::size_t diffs_before = state_.pending_diffs.size();
  const auto gradients_before = state_.pending_router_gradients;
  const std::size_t records_before = state_.pending_records.size();
  const CallAccounting accounting_before = accounting_;
  journal_ = &journal;

  try {
    StageScope scope(*this, Stage::ClientCentric);
    touch(record.user);
    touch(record.positive);
    touch(record.negative);
    ClientAgent& u = client(record.user);
    ClientAgent& pos = client(record.positive);
    ClientAgent& neg = client(record.negative);

    FeedbackRecord fb;
    fb.record = record;
    fb.record_index = state_.records_processed;
    for (const ClientAgent* c : {&u, &pos, &neg}) {
      for (const auto& m : c->buffer.entries()) {
        if (m.router_id != kNoRouter) fb.contributing_routers.insert(m.router_id);
      }
    }

    InteractionContext ctx;
    ctx.user = u.id;
    ctx.positive = pos.id;
    ctx.negative = neg.id;
    ctx.user_profile = u.profile;
    ctx.positive_profile = pos.profile;
    ctx.negative_profile = neg.profile;
    ctx.user_merged = merge_for_step(u);
    ctx.positive_merged = merge_for_step(pos);
    ctx.negative_merged = merge_for_step(neg);

    const CandidateView pos_view{pos.id, ctx.positive_merged};
    const CandidateView neg_view{neg.id, ctx.negative_merged};
    const bool pos_first = pos.id.raw <= neg.id.raw;
    PredictOutcome outcome = pos_first ? backend_.predict(ctx.user_merged, pos_view, neg_view)
                                       : backend_.predict(ctx.user_merged, neg_view, pos_view);
    if (!outcome.parsed || (outcome.chosen != pos.id && outcome.chosen != neg.id)) {
      warnings_.push_back("record " + std::to_string(fb.record_index) + ": prediction unusable, scored as wrong");
      fb.parsed = false;
      outcome.chosen = neg.id;
    }
    fb.chosen = outcome.chosen;
    fb.reward = fb.parsed ? compute_reward(outcome.chosen, pos.id) : 0;
    ctx.chosen = fb.chosen;
    ctx.reward = fb.reward;
    std::uint64_t baseline = 1;

    if (gate_.feedback) {
      fb.involved_modules.push_back(ModuleRef::profile_of(u.id));
      if (gate_.filter && gate_.optimize_filter) fb.involved_modules.push_back(ModuleRef::filter_of(u.id));
      fb.involved_modules.push_back(ModuleRef::profile_of(pos.id));
      fb.involved_modules.push_back(ModuleRef::profile_of(neg.id));
      if (gate_.routers && gate_.optimize_router) {
        for (RouterId r : fb.contributing_routers) {
          if (find_router(state_.routers, r)) fb.involved_modules.push_back(ModuleRef::router_of(r));
        }
      }

      const ModuleResolver resolve = [&](const ModuleRef& m) -> ModuleContent {
        switch (m.kind) {
          case ModuleRef::Kind::ClientProfile: {
            const ClientAgent& c = client(*m.client);
            return {c.profile, c.attributes};
          }
          case ModuleRef::Kind::FilterMem: return {client(*m.client).filter_memory.render(), {}};
          case ModuleRef::Kind::Router: {
            const RouterAgent* r = find_router(state_.routers, m.router);
            return {r->profile, r->attributes};
          }
        }
        return {};
      };
      const auto gradients = assign_credit(fb, ctx, resolve, backend_);
      auto update = optimize_client_modules(gradients, state_.clients, backend_,
                                            {true, gate_.filter && gate_.optimize_filter});
      for (auto& w : update.warnings) warnings_.push_back(std::move(w));
      for (auto& d : update.diffs) state_.pending_diffs.push_back(std::move(d));
      baseline += 3 + update.profile_optimizer_calls;

      for (const auto& g : gradients) {
        if (g.module_ref.kind != ModuleRef::Kind::Router) continue;
        state_.pending_router_gradients[g.module_ref.router].push_back(
            {g, GradientProvenance{u.id, fb.record_index, fb.reward}});
      }
    }

    if (gate_.per_step_neighbors) {
      accounting_.neighbor_fanout += propagate_point_to_point(state_.clients, {u.id}, true);
    }

    ++u.interaction_count;
    ++pos.interaction_count;
    state_.pending_records.push_back(record);
    ++state_.records_processed;
    ++accounting_.interactions;
    accounting_.baseline_calls += baseline;
    journal_ = nullptr;
    collect_warnings();
    return fb;
  } catch (...) {
    journal_ = nullptr;
    for (auto& [id, original] : journal) state_.clients.at(id) = std::move(original);
    state_.pending_diffs.resize(diffs_before);
    state_.pending_router_gradients = gradients_before;
    state_.pending_records.resize(records_before);
    const auto by_stage = accounting_.by_stage;
    accounting_ = accounting_before;
    accounting_.by_stage = by_stage;
    collect_warnings();
    throw;
  }
}

void Engine::run_router_stage(EngineState& next, BatchReport& report) {
  std::set<RouterId> updated;
  std::vector<std::string> warnings;

  if (gate_.routers) {
    if (gate_.feedback && gate_.optimize_router && !next.pending_router_gradients.empty()) {
      const AttributeContext context(next.clients, embedder_);
      RouterIdAllocator ids(next.next_router_id);
      RouterEvolution evo{backend_, embedder_, context, ids, config_.split_threshold, next.batch_index,
                          config_.seed};
      for (const auto& [rid, grads] : next.pending_router_gradients) {
        const RouterAgent* r = find_router(next.routers, rid);
        if (!r) {
          warnings.push_back("router " + std::to_string(rid) + " retired before its gradients were applied");
          continue;
        }
        const AggregatedGradient agg = aggregate_router_gradients(*r, grads);
        for (const auto& w : agg.warnings) warnings.push_back("router " + std::to_string(rid) + ": " + w);
        const RouterDecision decision = decide_router_action(*r, agg, next.routers, backend_);
        if (auto entry = apply_router_decision(next.routers, rid, decision, agg, evo, warnings)) {
          for (RouterId c : entry->children) updated.insert(c);
          for (RouterId c : entry->retired) updated.erase(c);
          if (entry->revised != kNoRouter) updated.insert(entry->revised);
          lineage_.push_back(*entry);
        }
      }
      next.next_router_id = ids.peek();
    }

    for (RouterId id : integrate_batch(next.pending_diffs, next.routers, backend_, embedder_)) updated.insert(id);
    std::erase_if(updated, [&](RouterId id) { return find_router(next.routers, id) == nullptr; });

    const std::vector<RouterId> ids(updated.begin(), updated.end());
    const RoutingTable table =
        build_routing_table(ids, next.routers, next.clients, embedder_, config_.tau, next.batch_index);
    std::vector<Delivery> log;
    if (gate_.buffer) {
      log = multicast(ids, next.routers, next.clients, table);
    } else {
      for (RouterId id : ids) {
        const PropagatedMessage msg = message_from(*find_router(next.routers, id));
        for (const auto& [key, s] : table.scores) {
          if (key.first != id || !(s > table.tau)) continue;
          deliver(next.clients, key.second, msg);
          log.push_back({table.built_at, id, key.second, s});
        }
      }
    }
    report.deliveries = log.size();
    for (auto& d : log) deliveries_.push_back(std::move(d));
    report.updated = ids;
  } else if (gate_.point_to_point && !gate_.per_step_neighbors) {
    std::vector<ClientId> sources;
    std::set<ClientId> seen;
    for (const auto& d : next.pending_diffs) {
      if (seen.insert(d.client).second) sources.push_back(d.client);
    }
    report.deliveries = propagate_point_to_point(next.clients, sources, false);
  }

  for (auto& w : warnings) warnings_.push_back(std::move(w));
  report.diffs = next.pending_diffs.size();
  report.records = next.pending_records.size();
  next.pending_diffs.clear();
  next.pending_router_gradients.clear();
  next.pending_records.clear();
  report.batch = next.batch_index;
  ++next.batch_index;
  report.k_after = next.routers.size();
  next.k_trajectory.push_back(next.routers.size());
}

std::optional<BatchReport> Engine::maybe_run_router_stage(bool force) {
  const std::size_t gate_size = gate_.async_batches ? config_.update_size : 1;
  const bool pending = !state_.pending_records.empty() || !state_.pending_diffs.empty() ||
                       !state_.pending_router_gradients.empty();
  if (state_.pending_records.size() < gate_size && !(force && pending)) return std::nullopt;

  BatchReport report;
  report.k_before = state_.routers.size();
  EngineState next = state_;
  const std::size_t lineage_before = lineage_.size();
  const std::size_t deliveries_before = deliveries_.size();
  const std::size_t warnings_before = warnings_.size();
  {
    StageScope scope(*this, Stage::RouterCentric);
    try {
      run_router_stage(next, report);
    } catch (...) {
      lineage_.resize(lineage_before);
      deliveries_.resize(deliveries_before);
      warnings_.resize(warnings_before);
      collect_warnings();
      throw;
    }
    report.calls = scope.delta();
  }
  state_ = std::move(next);
  accounting_.routers_updated.push_back(report.updated.size());
  batches_.push_back(report);
  collect_warnings();
  return report;
}

RunReport Engine::run(std::span<const InteractionRecord> records) {
  for (const auto& r : records) {
    step(r);
    maybe_run_router_stage();
  }
  maybe_run_router_stage(true);
  return report();
}

std::string Engine::augment_cold_start(const ClientId& id) {
  ClientAgent& c = client(id);
  if (c.interaction_count > 1) {
    throw Error(ErrorCode::PreconditionViolation,
                id.key() + " has " + std::to_string(c.interaction_count) + " interactions; not cold");
  }
  StageScope scope(*this, Stage::Evaluation);
  const EmbeddingVector e = embedder_.embed(c.profile);
  std::vector<const RouterAgent*> ordered;
  for (const auto& r : state_.routers) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (const RouterAgent* r : ordered) {
    if (score_with(*r, c, e, true) > config_.tau) c.buffer.push(message_from(*r));
  }
  std::string out = flush_and_merge(c, backend_);
  collect_warnings();
  return out;
}

std::string Engine::merged_profile(const ClientId& id) {
  StageScope scope(*this, Stage::Evaluation);
  std::string out = flush_and_merge(client(id), backend_);
  collect_warnings();
  return out;
}

std::vector<ClientId> Engine::rank_items(std::string_view user_profile, std::span<const CandidateView> candidates) {
  StageScope scope(*this, Stage::Evaluation);
  auto out = backend_.rank(user_profile, candidates);
  collect_warnings();
  return out;
}

RunReport Engine::report() const {
  RunReport r;
  r.variant = std::string(to_string(config_.variant));
  r.interactions = accounting_.interactions;
  r.batches = state_.batch_index;
  r.accounting = accounting_;
  r.k_trajectory = state_.k_trajectory;
  r.lineage = lineage_;
  r.deliveries = deliveries_;
  r.warnings = warnings_;
  return r;
}

// ---------------------------------------------------------------------------
// JSON

json calls_to_json(const CallCounts& c) {
  json j = json::object();
  for (PromptKind k : kAllPromptKinds) j[std::string(to_string(k))] = at(c, k);
  return j;
}

namespace {

CallCounts calls_from_json(const json& j) {
  CallCounts c{};
  for (PromptKind k : kAllPromptKinds) at(c, k) = j.value(std::string(to_string(k)), std::uint64_t{0});
  return c;
}

constexpr std::array<Stage, kStageCount> kStages{Stage::Initialization, Stage::ClientCentric, Stage::RouterCentric,
                                                 Stage::Evaluation};

RouterDecision::Action parse_action(const std::string& s) {
  if (s == "split") return RouterDecision::Action::Split;
  if (s == "merge") return RouterDecision::Action::Merge;
  if (s == "rewrite") return RouterDecision::Action::Rewrite;
  return RouterDecision::Action::NoOp;
}

}  // namespace

json RunReport::to_json() const {
  json calls = json::object();
  for (Stage s : kStages) calls[std::string(recnet::to_string(s))] = calls_to_json(accounting.at(s));
  return json{
      {"variant", variant},
      {"interactions", interactions},
      {"batches", batches},
      {"calls", calls},
      {"k_trajectory", k_trajectory},
      {"lambda_observed", accounting.lambda_observed()},
      {"baseline_calls", accounting.baseline_calls},
      {"routers_updated", accounting.routers_updated},
      {"neighbor_fanout", accounting.neighbor_fanout},
      {"deliveries", deliveries.size()},
      {"lineage_events", lineage.size()},
      {"warnings", warnings.size()},
  };
}

void to_json(json& j, const AttributeDiff& d) { j = json{{"client", d.client}, {"added", d.added}}; }
void from_json(const json& j, AttributeDiff& d) {
  d.client = j.at("client").get<ClientId>();
  d.added = j.at("added").get<AttributeSet>();
}

void to_json(json& j, const LineageEntry& e) {
  j = json{{"batch", e.batch},       {"router", e.router},   {"action", std::string(to_string(e.action))},
           {"children", e.children}, {"retired", e.retired}, {"revised", e.revised},
           {"k_after", e.k_after}};
}
void from_json(const json& j, LineageEntry& e) {
  e.batch = j.at("batch").get<std::uint64_t>();
  e.router = j.at("router").get<RouterId>();
  e.action = parse_action(j.at("action").get<std::string>());
  e.children = j.at("children").get<std::vector<RouterId>>();
  e.retired = j.at("retired").get<std::vector<RouterId>>();
  e.revised = j.at("revised").get<RouterId>();
  e.k_after = j.at("k_after").get<std::size_t>();
}

void to_json(json& j, const Delivery& d) {
  j = json{{"batch", d.batch}, {"router", d.router}, {"client", d.client}, {"score", d.score}};
}
void from_json(const json& j, Delivery& d) {
  d.batch = j.at("batch").get<std::uint64_t>();
  d.router = j.at("router").get<RouterId>();
  d.client = j.at("client").get<ClientId>();
  d.score = j.at("score").get<double>();
}

void to_json(json& j, const CallAccounting& a) {
  json stages = json::object();
  for (Stage s : kStages) stages[std::string(to_string(s))] = calls_to_json(a.at(s));
  j = json{{"calls", stages},
           {"interactions", a.interactions},
           {"baseline_calls", a.baseline_calls},
           {"routers_updated", a.routers_updated},
           {"neighbor_fanout", a.neighbor_fanout}};
}
void from_json(const json& j, CallAccounting& a) {
  for (Stage s : kStages) a.at(s) = calls_from_json(j.at("calls").at(std::string(to_string(s))));
  a.interactions = j.at("interactions").get<std::uint64_t>();
  a.baseline_calls = j.at("baseline_calls").get<std::uint64_t>();
  a.routers_updated = j.at("routers_updated").get<std::vector<std::uint64_t>>();
  a.neighbor_fanout = j.at("neighbor_fanout").get<std::uint64_t>();
}

void to_json(json& j, const EngineState& s) {
  json clients = json::array();
  for (const auto& [_, c] : s.clients) clients.push_back(c);
  json gradients = json::array();
  for (const auto& [rid, list] : s.pending_router_gradients) {
    json items = json::array();
    for (const auto& g : list) {
      items.push_back(json{{"gradient", g.gradient},
                           {"provenance",
                            {{"client", g.provenance.client},
                             {"record_index", g.provenance.record_index},
                             {"reward", g.provenance.reward}}}});
    }
    gradients.push_back(json{{"router", rid}, {"gradients", items}});
  }
  j = json{{"clients", clients},
           {"routers", s.routers},
           {"pending_diffs", s.pending_diffs},
           {"pending_router_gradients", gradients},
           {"pending_records", s.pending_records},
           {"batch_index", s.batch_index},
           {"records_processed", s.records_processed},
           {"next_router_id", s.next_router_id},
           {"k_trajectory", s.k_trajectory}};
}

void from_json(const json& j, EngineState& s) {
  s = EngineState{};
  for (const auto& c : j.at("clients")) {
    auto agent = c.get<ClientAgent>();
    const ClientId id = agent.id;
    s.clients.emplace(id, std::move(agent));
  }
  s.routers = j.at("routers").get<std::vector<RouterAgent>>();
  s.pending_diffs = j.at("pending_diffs").get<std::vector<AttributeDiff>>();
  for (const auto& entry : j.at("pending_router_gradients")) {
    auto& list = s.pending_router_gradients[entry.at("router").get<RouterId>()];
    for (const auto& g : entry.at("gradients")) {
      const auto& p = g.at("provenance");
      list.push_back({g.at("gradient").get<TextualGradient>(),
                      GradientProvenance{p.at("client").get<ClientId>(), p.at("record_index").get<std::uint64_t>(),
                                         p.at("reward").get<int>()}});
    }
  }
  s.pending_records = j.at("pending_records").get<std::vector<InteractionRecord>>();
  s.batch_index = j.at("batch_index").get<std::uint64_t>();
  s.records_processed = j.at("records_processed").get<std::uint64_t>();
  s.next_router_id = j.at("next_router_id").get<RouterId>();
  s.k_trajectory = j.at("k_trajectory").get<std::vector<std::size_t>>();
}

json Engine::snapshot() const {
  return json{{"config", config_},
              {"state", state_},
              {"accounting", accounting_},
              {"lineage", lineage_},
              {"warnings", warnings_}};
}

void Engine::restore(const json& snapshot) {
  const auto cfg = snapshot.at("config").get<NetworkConfig>();
  if (cfg != config_) throw Error(ErrorCode::ConfigError, "snapshot was taken under a different config");
  state_ = snapshot.at("state").get<EngineState>();
  accounting_ = snapshot.at("accounting").get<CallAccounting>();
  lineage_ = snapshot.at("lineage").get<std::vector<LineageEntry>>();
  warnings_ = snapshot.value("warnings", std::vector<std::string>{});
  deliveries_.clear();
  batches_.clear();
}

}  // namespace recnet
