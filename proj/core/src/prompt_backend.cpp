#include "recnet/prompt_backend.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "recnet/embedding.hpp"
#include "recnet/error.hpp"
#include "recnet/reception.hpp"
#include "recnet/text.hpp"

namespace recnet {

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Extract: return "extract";
    case PromptKind::Summarize: return "summarize";
    case PromptKind::Merge: return "merge";
    case PromptKind::Predict: return "predict";
    case PromptKind::Gradient: return "gradient";
    case PromptKind::Optimizer: return "optimizer";
    case PromptKind::Rerank: return "rerank";
    case PromptKind::Rank: return "rank";
  }
  return "unknown";
}

CallCounts CallCounter::snapshot() const {
  CallCounts out{};
  for (std::size_t i = 0; i < kPromptKindCount; ++i) out[i] = counts_[i].load();
  return out;
}

// ---------------------------------------------------------------------------
// Base class: one counter bump per public call.

AttributeSet PromptBackend::extract(std::string_view profile) {
  counter_.bump(PromptKind::Extract);
  return do_extract(profile);
}

std::string PromptBackend::summarize(std::string_view router_profile, const AttributeSet& new_attrs) {
  counter_.bump(PromptKind::Summarize);
  return do_summarize(router_profile, new_attrs);
}

std::string PromptBackend::merge(std::span<const PropagatedMessage> buffered, const FilterMemory& filter,
                                 std::string_view profile) {
  counter_.bump(PromptKind::Merge);
  return do_merge(buffered, filter, profile);
}

PredictOutcome PromptBackend::predict(std::string_view user_profile, const CandidateView& first,
                                      const CandidateView& second) {
  counter_.bump(PromptKind::Predict);
  return do_predict(user_profile, first, second);
}

TextualGradient PromptBackend::gradient(const GradientRequest& request) {
  counter_.bump(PromptKind::Gradient);
  return do_gradient(request);
}

std::string PromptBackend::optimize_profile(std::string_view profile, std::string_view gradient_text) {
  counter_.bump(PromptKind::Optimizer);
  return do_optimize_profile(profile, gradient_text);
}

FilterMemory PromptBackend::optimize_filter(const FilterMemory& filter, std::string_view gradient_text) {
  counter_.bump(PromptKind::Optimizer);
  return do_optimize_filter(filter, gradient_text);
}

RouterDecision PromptBackend::decide_router(const RouterView& view) {
  counter_.bump(PromptKind::Optimizer);
  return do_decide_router(view);
}

std::vector<ClientId> PromptBackend::rerank(std::string_view source_profile,
                                            std::span<const CandidateView> pool, std::size_t keep) {
  counter_.bump(PromptKind::Rerank);
  return do_rerank(source_profile, pool, keep);
}

std::vector<ClientId> PromptBackend::rank(std::string_view user_profile,
                                          std::span<const CandidateView> candidates) {
  counter_.bump(PromptKind::Rank);
  return do_rank(user_profile, candidates);
}

void PromptBackend::warn(std::string message) {
  std::lock_guard lock(warnings_mutex_);
  warnings_.push_back(std::move(message));
}

std::vector<std::string> PromptBackend::drain_warnings() {
  std::lock_guard lock(warnings_mutex_);
  return std::exchange(warnings_, {});
}

// ---------------------------------------------------------------------------
// Mock helpers.

std::vector<std::string> mock_extract_tokens(std::string_view profile, std::size_t max_attributes) {
  std::vector<std::string> out;
  for (auto& token : text::distinct_tokens(profile)) {
    if (out.size() >= max_attributes) break;
    if (text::is_stopword(token)) continue;
    out.push_back(std::move(token));
  }
  return out;
}

AttributeSet mock_extract(std::string_view profile, std::size_t max_attributes) {
  return to_attribute_set(mock_extract_tokens(profile, max_attributes));
}

double jaccard(const AttributeSet& a, const AttributeSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string render_router_profile(const AttributeSet& attrs, std::size_t max_attributes) {
  std::string out = "community interests:";
  std::size_t n = 0;
  for (const auto& a : attrs) {
    if (n == max_attributes) break;
    out += n == 0 ? " " : ", ";
    out += a.text();
    ++n;
  }
  return out;
}

std::string apply_profile_directives(std::string_view profile, std::span<const Directive> directives) {
  if (std::none_of(directives.begin(), directives.end(),
                   [](const Directive& d) { return d.is_profile_edit(); })) {
    return std::string(profile);
  }
  std::vector<std::string> tokens = text::distinct_tokens(profile);
  for (const auto& d : directives) {
    if (!d.is_profile_edit() || !d.attr) continue;
    for (const auto& t : text::tokenize(d.attr->text())) {
      auto it = std::find(tokens.begin(), tokens.end(), t);
      if (d.op == Directive::Op::Add && it == tokens.end()) tokens.push_back(t);
      if (d.op == Directive::Op::Remove && it != tokens.end()) tokens.erase(it);
    }
  }
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

RouterDecision mock_router_policy(const RouterView& view, std::uint32_t split_threshold,
                                  double merge_threshold) {
  const RouterAgent& self = view.router;
  if (self.attributes.size() > split_threshold) return {RouterDecision::Action::Split, kNoRouter, {}};

  std::vector<const RouterAgent*> others;
  for (const auto& r : view.routers) {
    if (r.id != self.id) others.push_back(&r);
  }
  std::sort(others.begin(), others.end(),
            [](const RouterAgent* a, const RouterAgent* b) { return a->id < b->id; });
  for (const RouterAgent* other : others) {
    if (other->embedding.dim() != self.embedding.dim()) continue;
    if (cosine(self.embedding, other->embedding) <= merge_threshold) continue;
    AttributeSet uni = self.attributes;
    uni.insert(other->attributes.begin(), other->attributes.end());
    if (uni.size() <= split_threshold) return {RouterDecision::Action::Merge, other->id, {}};
  }
  if (view.aggregated.negative_count > 0) return {RouterDecision::Action::Rewrite, kNoRouter, {}};
  return {};
}

std::vector<ClientId> mock_rank(std::string_view user_profile, std::span<const CandidateView> candidates,
                                std::size_t max_attributes) {
  const AttributeSet user = mock_extract(user_profile, max_attributes);
  std::vector<std::pair<double, const ClientId*>> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    scored.emplace_back(jaccard(user, mock_extract(c.profile, max_attributes)), &c.id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  std::vector<ClientId> out;
  out.reserve(scored.size());
  for (const auto& [_, id] : scored) out.push_back(*id);
  return out;
}

// ---------------------------------------------------------------------------
// Mock backend.

namespace {

std::set<std::string> token_set(std::string_view s, std::size_t cap) {
  auto v = mock_extract_tokens(s, cap);
  return {v.begin(), v.end()};
}

void push_unique(std::vector<Directive>& out, Directive d) {
  if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(std::move(d));
}

}  // namespace

MockPromptBackend::MockPromptBackend(MockOptions options) : options_(options) {}

AttributeSet MockPromptBackend::do_extract(std::string_view profile) {
  return mock_extract(profile, options_.max_attributes);
}

std::string MockPromptBackend::do_summarize(std::string_view router_profile, const AttributeSet& new_attrs) {
  if (new_attrs.empty()) return std::string(router_profile);
  AttributeSet all = mock_extract(router_profile, options_.max_attributes);
  all.insert(new_attrs.begin(), new_attrs.end());
  return render_router_profile(all, options_.max_attributes);
}

std::string MockPromptBackend::do_merge(std::span<const PropagatedMessage> buffered,
                                        const FilterMemory& filter, std::string_view profile) {
  if (buffered.empty()) return std::string(profile);
  const auto own_tokens = mock_extract_tokens(profile, std::numeric_limits<std::size_t>::max());
  std::set<std::string> seen(own_tokens.begin(), own_tokens.end());

  std::vector<std::string> pinned, regular;
  for (const auto& msg : buffered) {
    for (const auto& attr : msg.router_attributes) {
      if (!seen.insert(attr.text()).second) continue;
      if (filter.denies(attr)) continue;
      (filter.allows(attr) ? pinned : regular).push_back(attr.text());
    }
  }
  const std::size_t used = own_tokens.size() + pinned.size();
  const std::size_t budget = options_.max_attributes > used ? options_.max_attributes - used : 0;
  if (regular.size() > budget) regular.resize(budget);

  std::string out(profile);
  for (const auto* list : {&pinned, &regular}) {
    for (const auto& t : *list) {
      if (!out.empty()) out += ' ';
      out += t;
    }
  }
  return out;
}

PredictOutcome MockPromptBackend::do_predict(std::string_view user_profile, const CandidateView& first,
                                             const CandidateView& second) {
  const auto user = mock_extract(user_profile, options_.max_attributes);
  const double ja = jaccard(user, mock_extract(first.profile, options_.max_attributes));
  const double jb = jaccard(user, mock_extract(second.profile, options_.max_attributes));
  const CandidateView* pick = nullptr;
  if (ja > jb) {
    pick = &first;
  } else if (jb > ja) {
    pick = &second;
  } else {
    pick = first.id.raw <= second.id.raw ? &first : &second;
  }
  std::ostringstream why;
  why << "overlap " << first.id.raw << "=" << ja << " " << second.id.raw << "=" << jb;
  return {pick->id, why.str(), true};
}

TextualGradient MockPromptBackend::do_gradient(const GradientRequest& req) {
  const auto& ctx = req.context;
  TextualGradient out;
  out.module_ref = req.module;
  if (ctx.reward == 1) {
    out.reward_text = "module supported a correct prediction";
    return out;
  }
  out.reward_text = "module contributed to an incorrect prediction";

  const std::size_t cap = options_.max_attributes;
  const auto user_stored = token_set(ctx.user_profile, cap);
  const auto user_merged = token_set(ctx.user_merged, cap);
  const auto pos_stored = token_set(ctx.positive_profile, cap);
  const auto pos_merged_v = mock_extract_tokens(ctx.positive_merged, cap);
  const std::set<std::string> pos_merged(pos_merged_v.begin(), pos_merged_v.end());
  const auto neg_merged_v = mock_extract_tokens(ctx.negative_merged, cap);

  std::vector<Directive> ds;
  auto attr = [](const std::string& t) { return Attribute::parse(t); };

  switch (req.module.kind) {
    case ModuleRef::Kind::ClientProfile: {
      if (!req.module.client) break;
      if (*req.module.client == ctx.user) {
        for (const auto& t : mock_extract_tokens(ctx.positive_profile, cap)) {
          if (!user_merged.count(t)) push_unique(ds, Directive::add(attr(t)));
        }
      } else if (*req.module.client == ctx.positive) {
        for (const auto& t : pos_merged_v) {
          if (!pos_stored.count(t) && user_stored.count(t)) push_unique(ds, Directive::add(attr(t)));
        }
      }
      break;
    }
    case ModuleRef::Kind::FilterMem: {
      if (!req.module.client || *req.module.client != ctx.user) break;
      for (const auto& t : neg_merged_v) {
        if (user_merged.count(t) && !user_stored.count(t) && !pos_merged.count(t)) {
          push_unique(ds, Directive::deny(attr(t)));
        }
      }
      break;
    }
    case ModuleRef::Kind::Router: {
      // A router only absorbs the tokens of a positive it already overlaps.
      std::set<std::string> router;
      for (const auto& a : req.attributes) router.insert(a.text());
      const auto pos_tokens = mock_extract_tokens(ctx.positive_profile, cap);
      const bool related = std::any_of(pos_tokens.begin(), pos_tokens.end(),
                                       [&](const std::string& t) { return router.count(t) > 0; });
      if (!related) break;
      for (const auto& t : pos_tokens) {
        if (!router.count(t)) push_unique(ds, Directive::add(attr(t)));
      }
      break;
    }
  }
  out.gradient_text = render_directives(ds);
  return out;
}

std::string MockPromptBackend::do_optimize_profile(std::string_view profile,
                                                   std::string_view gradient_text) {
  auto parsed = parse_directives(gradient_text);
  for (auto& w : parsed.warnings) warn("optimize_profile: " + w);
  for (const auto& d : parsed.directives) {
    if (!d.is_profile_edit()) warn("optimize_profile: ignored '" + d.render() + "'");
  }
  return apply_profile_directives(profile, parsed.directives);
}

FilterMemory MockPromptBackend::do_optimize_filter(const FilterMemory& filter,
                                                   std::string_view gradient_text) {
  auto parsed = parse_directives(gradient_text);
  for (auto& w : parsed.warnings) warn("optimize_filter: " + w);
  for (const auto& d : parsed.directives) {
    if (!d.is_rule()) warn("optimize_filter: ignored '" + d.render() + "'");
  }
  return apply_rule_directives(filter, parsed.directives);
}

RouterDecision MockPromptBackend::do_decide_router(const RouterView& view) {
  return mock_router_policy(view, options_.split_threshold, options_.merge_threshold);
}

std::vector<ClientId> MockPromptBackend::do_rerank(std::string_view source_profile,
                                                   std::span<const CandidateView> pool, std::size_t keep) {
  auto ranked = mock_rank(source_profile, pool, options_.max_attributes);
  if (ranked.size() > keep) ranked.resize(keep);
  return ranked;
}

std::vector<ClientId> MockPromptBackend::do_rank(std::string_view user_profile,
                                                 std::span<const CandidateView> candidates) {
  return mock_rank(user_profile, candidates, options_.max_attributes);
}

// ---------------------------------------------------------------------------
// Fault injection.

FaultInjectingBackend::FaultInjectingBackend(PromptBackend& inner, PromptKind kind, std::uint64_t nth)
    : inner_(inner), kind_(kind), nth_(nth) {}

void FaultInjectingBackend::maybe_fail(PromptKind kind) {
  if (kind != kind_) return;
  if (++seen_ == nth_) {
    fired_ = true;
    throw Error(ErrorCode::BackendUnavailable,
                "injected failure on " + std::string(to_string(kind)) + " call " + std::to_string(nth_));
  }
}

AttributeSet FaultInjectingBackend::do_extract(std::string_view profile) {
  maybe_fail(PromptKind::Extract);
  return inner_.extract(profile);
}

std::string FaultInjectingBackend::do_summarize(std::string_view router_profile,
                                                const AttributeSet& new_attrs) {
  maybe_fail(PromptKind::Summarize);
  return inner_.summarize(router_profile, new_attrs);
}

std::string FaultInjectingBackend::do_merge(std::span<const PropagatedMessage> buffered,
                                            const FilterMemory& filter, std::string_view profile) {
  maybe_fail(PromptKind::Merge);
  return inner_.merge(buffered, filter, profile);
}

PredictOutcome FaultInjectingBackend::do_predict(std::string_view user_profile, const CandidateView& first,
                                                 const CandidateView& second) {
  maybe_fail(PromptKind::Predict);
  return inner_.predict(user_profile, first, second);
}

TextualGradient FaultInjectingBackend::do_gradient(const GradientRequest& request) {
  maybe_fail(PromptKind::Gradient);
  return inner_.gradient(request);
}

std::string FaultInjectingBackend::do_optimize_profile(std::string_view profile,
                                                       std::string_view gradient_text) {
  maybe_fail(PromptKind::Optimizer);
  return inner_.optimize_profile(profile, gradient_text);
}

FilterMemory FaultInjectingBackend::do_optimize_filter(const FilterMemory& filter,
                                                       std::string_view gradient_text) {
  maybe_fail(PromptKind::Optimizer);
  return inner_.optimize_filter(filter, gradient_text);
}

RouterDecision FaultInjectingBackend::do_decide_router(const RouterView& view) {
  maybe_fail(PromptKind::Optimizer);
  return inner_.decide_router(view);
}

std::vector<ClientId> FaultInjectingBackend::do_rerank(std::string_view source_profile,
                                                       std::span<const CandidateView> pool,
                                                       std::size_t keep) {
  maybe_fail(PromptKind::Rerank);
  return inner_.rerank(source_profile, pool, keep);
}

std::vector<ClientId> FaultInjectingBackend::do_rank(std::string_view user_profile,
                                                     std::span<const CandidateView> candidates) {
  maybe_fail(PromptKind::Rank);
  return inner_.rank(user_profile, candidates);
}

}  // namespace recnet
