#pragma once

// Textual-gradient directive grammar and the router-side optimization types.
//
// A gradient text is newline separated; every non-blank line is one of
//   add:<attr>  remove:<attr>  rule:allow:<attr>  rule:deny:<attr>
//   router:split  router:merge:<id>  router:rewrite
// Anything else is skipped with a warning.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recnet/types.hpp"

namespace recnet {

struct Directive {
  enum class Op { Add, Remove, RuleAllow, RuleDeny, RouterSplit, RouterMerge, RouterRewrite };

  Op op = Op::Add;
  std::optional<Attribute> attr;
  RouterId merge_target = kNoRouter;

  static Directive add(Attribute a) { return {Op::Add, std::move(a), kNoRouter}; }
  static Directive remove(Attribute a) { return {Op::Remove, std::move(a), kNoRouter}; }
  static Directive allow(Attribute a) { return {Op::RuleAllow, std::move(a), kNoRouter}; }
  static Directive deny(Attribute a) { return {Op::RuleDeny, std::move(a), kNoRouter}; }

  bool is_profile_edit() const { return op == Op::Add || op == Op::Remove; }
  bool is_rule() const { return op == Op::RuleAllow || op == Op::RuleDeny; }

  std::string render() const;
  friend bool operator==(const Directive&, const Directive&) = default;
};

struct ParsedDirectives {
  std::vector<Directive> directives;
  std::vector<std::string> warnings;
};

ParsedDirectives parse_directives(std::string_view text);
std::string render_directives(std::span<const Directive> directives);

struct RouterDecision {
  enum class Action { Split, Merge, Rewrite, NoOp };

  Action action = Action::NoOp;
  RouterId merge_target = kNoRouter;
  std::optional<std::string> payload;

  friend bool operator==(const RouterDecision&, const RouterDecision&) = default;
};

std::string_view to_string(RouterDecision::Action a);

struct GradientProvenance {
  ClientId client;
  std::uint64_t record_index = 0;
  int reward = 0;

  friend bool operator==(const GradientProvenance&, const GradientProvenance&) = default;
};

/// A router-targeted gradient waiting for the next router-centric stage.
struct PendingRouterGradient {
  TextualGradient gradient;
  GradientProvenance provenance;

  friend bool operator==(const PendingRouterGradient&, const PendingRouterGradient&) = default;
};

struct AggregatedGradient {
  RouterId router = kNoRouter;
  // Concatenated in feedback order; each directive keeps its origin.
  std::vector<std::pair<Directive, GradientProvenance>> directives;
  std::vector<GradientProvenance> sources;
  std::size_t negative_count = 0;
  std::size_t size = 0;  // |attributes| of the router at aggregation time
  std::vector<std::string> warnings;

  std::string render() const;
};

}  // namespace recnet
