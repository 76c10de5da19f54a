#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "recnet/embedding.hpp"
#include "recnet/error.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/reception.hpp"
#include "recnet/serialization.hpp"
#include "resources.hpp"

namespace recnet {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> lines_of(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto nl = s.find('\n');
    const auto line = trim(s.substr(0, nl));
    if (!line.empty()) out.push_back(line);
    s = nl == std::string_view::npos ? std::string_view{} : s.substr(nl + 1);
  }
  return out;
}

// Drops list markers such as "1.", "2)", "-", "*".
std::string_view strip_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
    line.remove_prefix(i + 1);
  } else if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
    line.remove_prefix(1);
  }
  return trim(line);
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Case-insensitive whole-word search.
bool mentions(std::string_view haystack_lower, std::string_view needle) {
  const std::string n = lower(needle);
  if (n.empty()) return false;
  std::size_t pos = 0;
  while ((pos = haystack_lower.find(n, pos)) != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
    const std::size_t end = pos + n.size();
    const bool right_ok = end >= haystack_lower.size() || !is_word_char(haystack_lower[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

std::string strip_header(std::string_view tmpl) {
  std::string out;
  bool header = true;
  for (std::string_view rest = tmpl; !rest.empty();) {
    const auto nl = rest.find('\n');
    const auto line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    if (header && line.substr(0, 1) == "#") continue;
    header = false;
    out.append(line);
    out.push_back('\n');
  }
  return out;
}

std::string join_attrs(const AttributeSet& attrs, std::string_view sep) {
  std::string out;
  for (const auto& a : attrs) {
    if (!out.empty()) out += sep;
    out += a.text();
  }
  return out;
}

std::string describe_module(const ModuleRef& m) { return m.describe(); }

}  // namespace

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    const std::string name(trim(tmpl.substr(open + 2, close - open - 2)));
    if (auto it = vars.find(name); it != vars.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    i = close + 2;
  }
  return out;
}

std::string_view builtin_template(PromptKind kind) {
  switch (kind) {
    case PromptKind::Extract: return resources::prompt_extract();
    case PromptKind::Summarize: return resources::prompt_summarize();
    case PromptKind::Merge: return resources::prompt_merge();
    case PromptKind::Predict: return resources::prompt_predict();
    case PromptKind::Gradient: return resources::prompt_gradient();
    case PromptKind::Optimizer: return resources::prompt_optimizer();
    case PromptKind::Rerank: return resources::prompt_rerank();
    case PromptKind::Rank: return resources::prompt_rank();
  }
  return {};
}

std::optional<ClientId> parse_predict_reply(std::string_view reply, const CandidateView& first,
                                            const CandidateView& second) {
  auto pick = [&](std::string_view text) -> std::optional<ClientId> {
    const std::string l = lower(text);
    const bool a = mentions(l, "item a") || mentions(l, first.id.raw);
    const bool b = mentions(l, "item b") || mentions(l, second.id.raw);
    if (a && !b) return first.id;
    if (b && !a) return second.id;
    return std::nullopt;
  };
  const auto ls = lines_of(reply);
  if (!ls.empty()) {
    if (auto r = pick(ls.front())) return r;
  }
  if (auto r = pick(reply)) return r;
  const std::string bare = lower(trim(reply));
  if (bare == "a") return first.id;
  if (bare == "b") return second.id;
  return std::nullopt;
}

std::optional<RouterDecision> parse_decision_reply(std::string_view reply) {
  const auto ls = lines_of(reply);
  if (ls.empty()) return std::nullopt;
  std::string head = lower(ls.front());
  if (head.rfind("decision:", 0) == 0) head = std::string(trim(std::string_view(head).substr(9)));
  if (head.rfind("router:", 0) == 0) head = head.substr(7);

  RouterDecision d;
  if (head == "split") {
    d.action = RouterDecision::Action::Split;
  } else if (head == "rewrite") {
    d.action = RouterDecision::Action::Rewrite;
  } else if (head == "noop" || head == "no-op" || head == "none") {
    d.action = RouterDecision::Action::NoOp;
  } else if (head.rfind("merge", 0) == 0) {
    std::string_view rest = trim(std::string_view(head).substr(5));
    if (!rest.empty() && (rest[0] == ':' || rest[0] == ' ')) rest = trim(rest.substr(1));
    RouterId id = kNoRouter;
    const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), id);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || id == kNoRouter) return std::nullopt;
    d.action = RouterDecision::Action::Merge;
    d.merge_target = id;
  } else {
    return std::nullopt;
  }
  for (std::size_t i = 1; i < ls.size(); ++i) {
    if (lower(ls[i].substr(0, 8)) == "profile:") d.payload = std::string(trim(ls[i].substr(8)));
  }
  return d;
}

std::optional<std::vector<ClientId>> parse_ranking_reply(std::string_view reply,
                                                         std::span<const CandidateView> candidates) {
  std::vector<ClientId> out;
  std::set<std::size_t> used;
  for (auto line : lines_of(reply)) {
    line = strip_marker(line);
    // "A", "A.", "A: title", or a raw id.
    std::optional<std::size_t> idx;
    if (!line.empty() && std::isalpha(static_cast<unsigned char>(line[0])) &&
        (line.size() == 1 || !is_word_char(line[1]))) {
      const auto k = static_cast<std::size_t>(std::toupper(static_cast<unsigned char>(line[0])) - 'A');
      if (k < candidates.size()) idx = k;
    }
    if (!idx) {
      const std::string l = lower(line);
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (l == lower(candidates[k].id.raw) || l == lower(candidates[k].id.key())) idx = k;
      }
    }
    if (!idx || !used.insert(*idx).second) return std::nullopt;
    out.push_back(candidates[*idx].id);
  }
  if (out.size() != candidates.size()) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------

HttpPromptBackend::HttpPromptBackend(ChatBackendConfig config, std::unique_ptr<HttpTransport> transport,
                                     RetryPolicy retry)
    : config_(std::move(config)),
      credential_(config_.endpoint.resolve_credential()),
      transport_(std::move(transport)),
      retry_(std::move(retry)) {
  if (config_.endpoint.path.empty()) config_.endpoint.path = "/v1/chat/completions";
  for (PromptKind kind : kAllPromptKinds) {
    std::string tmpl(builtin_template(kind));
    if (config_.template_dir) {
      const auto path = *config_.template_dir / (std::string(to_string(kind)) + ".txt");
      if (std::ifstream in{path}) {
        std::ostringstream buf;
        buf << in.rdbuf();
        tmpl = buf.str();
      }
    }
    templates_[kind] = strip_header(tmpl);
  }
}

std::string HttpPromptBackend::template_for(PromptKind kind) const { return templates_.at(kind); }

std::string HttpPromptBackend::http_complete(PromptKind kind, const std::string& rendered_prompt) {
  ++http_calls_;
  HttpHeaders headers{{"Content-Type", "application/json"}};
  if (!credential_.empty()) headers.emplace_back("Authorization", "Bearer " + credential_);
  const json request{
      {"model", config_.endpoint.model},
      {"temperature", config_.temperature},
      {"messages", json::array({json{{"role", "user"}, {"content", rendered_prompt}}})},
  };
  const HttpResponse res =
      post_with_retry(*transport_, config_.endpoint.path, request.dump(), headers, retry_);
  try {
    const json body = json::parse(res.body);
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse,
                std::string(to_string(kind)) + " completion: " + e.what());
  }
}

std::string HttpPromptBackend::complete(PromptKind kind, const std::map<std::string, std::string>& vars) {
  return http_complete(kind, render_template(template_for(kind), vars));
}

AttributeSet HttpPromptBackend::do_extract(std::string_view profile) {
  const std::string reply = complete(PromptKind::Extract, {{"profile", std::string(profile)}});
  AttributeSet out;
  for (auto line : lines_of(reply)) {
    std::string_view rest = strip_marker(line);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      if (auto a = Attribute::try_parse(rest.substr(0, comma))) {
        if (out.size() < config_.fallback.max_attributes) out.insert(*std::move(a));
      }
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  return out;
}

std::string HttpPromptBackend::do_summarize(std::string_view router_profile, const AttributeSet& new_attrs) {
  return std::string(trim(complete(PromptKind::Summarize, {{"router_profile", std::string(router_profile)},
                                                           {"new_attributes", join_attrs(new_attrs, ", ")}})));
}

std::string HttpPromptBackend::do_merge(std::span<const PropagatedMessage> buffered, const FilterMemory& filter,
                                        std::string_view profile) {
  std::string messages;
  for (const auto& m : buffered) {
    messages += "- ";
    if (m.source_client) {
      messages += "[from " + m.source_client->key() + "] ";
    } else {
      messages += "[community " + std::to_string(m.router_id) + "] ";
    }
    messages += m.router_profile + " (attributes: " + join_attrs(m.router_attributes, ", ") + ")\n";
  }
  if (messages.empty()) messages = "(none)\n";
  std::string rules = filter.render();
  if (rules.empty()) rules = "(none)";
  return std::string(trim(complete(PromptKind::Merge, {{"client", "this participant"},
                                                       {"profile", std::string(profile)},
                                                       {"rules", rules},
                                                       {"messages", messages}})));
}

PredictOutcome HttpPromptBackend::do_predict(std::string_view user_profile, const CandidateView& first,
                                             const CandidateView& second) {
  const std::string reply = complete(PromptKind::Predict, {{"user_profile", std::string(user_profile)},
                                                           {"item_a_id", first.id.raw},
                                                           {"item_a", first.profile},
                                                           {"item_b_id", second.id.raw},
                                                           {"item_b", second.profile}});
  if (auto chosen = parse_predict_reply(reply, first, second)) return {*chosen, reply, true};
  warn("predict: unparseable choice: " + std::string(trim(reply)).substr(0, 120));
  return {first.id, reply, false};
}

TextualGradient HttpPromptBackend::do_gradient(const GradientRequest& req) {
  const auto& c = req.context;
  std::string content = req.content;
  if (req.module.kind == ModuleRef::Kind::Router && !req.attributes.empty()) {
    content += "\nattributes: " + join_attrs(req.attributes, ", ");
  }
  const std::string reply = complete(PromptKind::Gradient, {{"user", c.user.raw},
                                                            {"chosen", c.chosen.raw},
                                                            {"positive", c.positive.raw},
                                                            {"negative", c.negative.raw},
                                                            {"reward", std::to_string(c.reward)},
                                                            {"user_merged", c.user_merged},
                                                            {"positive_merged", c.positive_merged},
                                                            {"negative_merged", c.negative_merged},
                                                            {"module", describe_module(req.module)},
                                                            {"content", content}});
  TextualGradient out;
  out.module_ref = req.module;
  const std::string l = lower(reply);
  const auto g = l.find("gradient:");
  const auto r = l.find("reward:");
  if (g == std::string::npos) {
    warn("gradient: reply without GRADIENT section for " + req.module.describe());
    out.gradient_text = std::string(trim(reply));
    return out;
  }
  if (r != std::string::npos && r < g) out.reward_text = std::string(trim(reply.substr(r + 7, g - r - 7)));
  out.gradient_text = std::string(trim(std::string_view(reply).substr(g + 9)));
  return out;
}

std::string HttpPromptBackend::do_optimize_profile(std::string_view profile, std::string_view gradient_text) {
  return std::string(trim(complete(
      PromptKind::Optimizer,
      {{"module_kind", "participant profile"},
       {"content", std::string(profile)},
       {"gradient", std::string(gradient_text)},
       {"instructions",
        "Apply the add/remove suggestions and keep every other preference. "
        "Answer with the revised profile text only."}})));
}

FilterMemory HttpPromptBackend::do_optimize_filter(const FilterMemory& filter, std::string_view gradient_text) {
  const std::string reply = complete(
      PromptKind::Optimizer,
      {{"module_kind", "integration rules"},
       {"content", filter.rules.empty() ? "(none)" : filter.render()},
       {"gradient", std::string(gradient_text)},
       {"instructions",
        "Answer with the full revised rule list, one rule per line, each of the form "
        "allow:<keyword> or deny:<keyword>."}});
  FilterMemory out;
  out.max_rules = filter.max_rules;
  for (auto line : lines_of(reply)) {
    line = strip_marker(line);
    if (line.substr(0, 5) == "rule:") line.remove_prefix(5);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string head = lower(trim(line.substr(0, colon)));
    auto pattern = Attribute::try_parse(line.substr(colon + 1));
    if (!pattern || (head != "allow" && head != "deny")) continue;
    out.add(FilterRule{head == "allow" ? FilterAction::Allow : FilterAction::Deny, *pattern});
  }
  if (!out.rules.empty()) return out;
  warn("optimize_filter: no rules in reply; applying directives directly");
  return apply_rule_directives(filter, parse_directives(gradient_text).directives);
}

RouterDecision HttpPromptBackend::do_decide_router(const RouterView& view) {
  std::string others;
  for (const auto& r : view.routers) {
    if (r.id == view.router.id) continue;
    const double sim = r.embedding.dim() == view.router.embedding.dim()
                           ? cosine(r.embedding, view.router.embedding)
                           : 0.0;
    others += std::to_string(r.id) + ": " + r.profile + " (similarity " + std::to_string(sim) + ")\n";
  }
  const std::string reply = complete(
      PromptKind::Optimizer,
      {{"module_kind", "community router " + std::to_string(view.router.id)},
       {"content", view.router.profile + "\nattributes: " + join_attrs(view.router.attributes, ", ")},
       {"gradient", view.aggregated.render()},
       {"instructions",
        "Other communities:\n" + (others.empty() ? std::string("(none)\n") : others) +
            "Decide one action. Answer on the first line with exactly one of: split | merge:<id> | "
            "rewrite | noop. For rewrite, add a second line 'PROFILE: <new profile>'."}});
  auto d = parse_decision_reply(reply);
  if (!d) {
    warn("router " + std::to_string(view.router.id) + ": unparseable decision, treated as noop");
    return {};
  }
  if (d->action == RouterDecision::Action::Merge) {
    const bool known = std::any_of(view.routers.begin(), view.routers.end(), [&](const RouterAgent& r) {
      return r.id == d->merge_target && r.id != view.router.id;
    });
    if (!known) {
      warn("router " + std::to_string(view.router.id) + ": merge target " +
           std::to_string(d->merge_target) + " unknown, treated as noop");
      return {};
    }
  }
  return *d;
}

std::vector<ClientId> HttpPromptBackend::do_rerank(std::string_view source_profile,
                                                   std::span<const CandidateView> pool, std::size_t keep) {
  std::string listing;
  for (const auto& c : pool) listing += c.id.key() + ": " + c.profile + "\n";
  const std::string reply = complete(PromptKind::Rerank, {{"source_profile", std::string(source_profile)},
                                                          {"candidates", listing},
                                                          {"keep", std::to_string(keep)}});
  std::vector<ClientId> out;
  for (auto line : lines_of(reply)) {
    const std::string l = lower(strip_marker(line));
    for (const auto& c : pool) {
      if ((l == lower(c.id.key()) || l == lower(c.id.raw)) &&
          std::find(out.begin(), out.end(), c.id) == out.end()) {
        out.push_back(c.id);
      }
    }
    if (out.size() == keep) break;
  }
  if (out.empty() && !pool.empty()) {
    warn("rerank: no candidate ids in reply; using overlap order");
    out = mock_rank(source_profile, pool, config_.fallback.max_attributes);
    if (out.size() > keep) out.resize(keep);
  }
  return out;
}

std::vector<ClientId> HttpPromptBackend::do_rank(std::string_view user_profile,
                                                 std::span<const CandidateView> candidates) {
  std::string listing;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    listing += std::string(1, static_cast<char>('A' + k)) + ": " + candidates[k].profile + "\n";
  }
  const std::map<std::string, std::string> vars{{"user_profile", std::string(user_profile)},
                                                {"candidates", listing}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (auto ranking = parse_ranking_reply(complete(PromptKind::Rank, vars), candidates)) return *ranking;
  }
  warn("rank: malformed ranking twice; using overlap order");
  return mock_rank(user_profile, candidates, config_.fallback.max_attributes);
}

}  // namespace recnet
