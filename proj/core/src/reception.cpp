#include "recnet/reception.hpp"

#include <vector>

namespace recnet {

std::string flush_and_merge(ClientAgent& client, PromptBackend& backend) {
  if (client.buffer.empty()) return client.profile;
  const std::vector<PropagatedMessage> newest_first(client.buffer.entries().begin(),
                                                    client.buffer.entries().end());
  std::string merged = backend.merge(newest_first, client.filter_memory, client.profile);
  client.buffer.clear();
  return merged;
}

FilterMemory apply_rule_directives(FilterMemory filter, std::span<const Directive> directives) {
  for (const auto& d : directives) {
    if (!d.is_rule() || !d.attr) continue;
    const auto action = d.op == Directive::Op::RuleAllow ? FilterAction::Allow : FilterAction::Deny;
    filter.add(FilterRule{action, *d.attr});
  }
  return filter;
}

}  // namespace recnet
