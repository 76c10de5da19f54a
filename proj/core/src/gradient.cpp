#include "recnet/gradient.hpp"

#include <charconv>
#include <sstream>

namespace recnet {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::string Directive::render() const {
  const std::string a = attr ? attr->text() : std::string();
  switch (op) {
    case Op::Add: return "add:" + a;
    case Op::Remove: return "remove:" + a;
    case Op::RuleAllow: return "rule:allow:" + a;
    case Op::RuleDeny: return "rule:deny:" + a;
    case Op::RouterSplit: return "router:split";
    case Op::RouterMerge: return "router:merge:" + std::to_string(merge_target);
    case Op::RouterRewrite: return "router:rewrite";
  }
  return {};
}

ParsedDirectives parse_directives(std::string_view text) {
  ParsedDirectives out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    auto with_attr = [&](Directive::Op op, std::string_view rest) {
      if (auto a = Attribute::try_parse(rest)) {
        out.directives.push_back({op, *std::move(a), kNoRouter});
      } else {
        out.warnings.push_back("line " + std::to_string(line_no) + ": empty attribute in '" +
                               std::string(line) + "'");
      }
    };

    if (starts_with(line, "add:")) {
      with_attr(Directive::Op::Add, line.substr(4));
    } else if (starts_with(line, "remove:")) {
      with_attr(Directive::Op::Remove, line.substr(7));
    } else if (starts_with(line, "rule:allow:")) {
      with_attr(Directive::Op::RuleAllow, line.substr(11));
    } else if (starts_with(line, "rule:deny:")) {
      with_attr(Directive::Op::RuleDeny, line.substr(10));
    } else if (line == "router:split") {
      out.directives.push_back({Directive::Op::RouterSplit, std::nullopt, kNoRouter});
    } else if (line == "router:rewrite") {
      out.directives.push_back({Directive::Op::RouterRewrite, std::nullopt, kNoRouter});
    } else if (starts_with(line, "router:merge:")) {
      const auto digits = trim(line.substr(13));
      RouterId id = kNoRouter;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
      if (ec == std::errc() && ptr == digits.data() + digits.size() && id != kNoRouter) {
        out.directives.push_back({Directive::Op::RouterMerge, std::nullopt, id});
      } else {
        out.warnings.push_back("line " + std::to_string(line_no) + ": bad router id in '" +
                               std::string(line) + "'");
      }
    } else {
      out.warnings.push_back("line " + std::to_string(line_no) + ": unknown directive '" +
                             std::string(line) + "'");
    }
  }
  return out;
}

std::string render_directives(std::span<const Directive> directives) {
  std::string out;
  for (const auto& d : directives) {
    if (!out.empty()) out += '\n';
    out += d.render();
  }
  return out;
}

std::string_view to_string(RouterDecision::Action a) {
  switch (a) {
    case RouterDecision::Action::Split: return "split";
    case RouterDecision::Action::Merge: return "merge";
    case RouterDecision::Action::Rewrite: return "rewrite";
    case RouterDecision::Action::NoOp: return "noop";
  }
  return "noop";
}

std::string AggregatedGradient::render() const {
  std::ostringstream out;
  for (const auto& [directive, origin] : directives) {
    out << directive.render() << "  # from " << origin.client.key() << " record "
        << origin.record_index << " reward " << origin.reward << '\n';
  }
  return out.str();
}

}  // namespace recnet
