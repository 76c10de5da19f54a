#pragma once

#include <span>
#include <string>

#include "recnet/gradient.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/types.hpp"

namespace recnet {

/// Fuses the buffered router messages into a merged profile and clears the
/// buffer. An empty buffer returns the stored profile without a backend call.
/// The stored profile is never replaced here. On a backend error the buffer is
/// left as it was.
std::string flush_and_merge(ClientAgent& client, PromptBackend& backend);

// Appends rule:allow / rule:deny directives (deduplicated, oldest evicted
// past max_rules). Other directive kinds are ignored.
FilterMemory apply_rule_directives(FilterMemory filter, std::span<const Directive> directives);

}  // namespace recnet
