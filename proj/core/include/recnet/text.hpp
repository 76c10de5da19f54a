#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace recnet::text {

// NFC, lowercase, every code point that is not a letter, digit or space
// becomes a space, whitespace collapsed and trimmed. May return "".
std::string normalize(std::string_view raw);

// Whitespace split of normalize(raw), duplicates kept, input order.
std::vector<std::string> tokenize(std::string_view raw);

// tokenize() minus duplicates, first occurrence wins.
std::vector<std::string> distinct_tokens(std::string_view raw);

bool is_stopword(std::string_view token);

// The checked-in stopword list, in file order.
const std::vector<std::string>& stopwords();

}  // namespace recnet::text
