#include "recnet/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "recnet/error.hpp"
#include "resources.hpp"

namespace recnet::text {

std::string normalize(std::string_view raw) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::InvalidValue, "ICU NFC normalizer unavailable");
  }
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  icu::UnicodeString composed = nfc->normalize(input, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::InvalidValue, "NFC normalization failed");
  }
  composed.toLower(icu::Locale::getRoot());

  icu::UnicodeString cleaned;
  bool pending_space = false;
  for (int32_t i = 0; i < composed.length();) {
    const UChar32 cp = composed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isalpha(cp) || u_isdigit(cp)) {
      if (pending_space && !cleaned.isEmpty()) cleaned.append(UChar32{' '});
      pending_space = false;
      cleaned.append(cp);
    } else {
      pending_space = true;
    }
  }
  std::string out;
  cleaned.toUTF8String(out);
  return out;
}

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  std::istringstream in(normalize(raw));
  for (std::string token; in >> token;) tokens.push_back(std::move(token));
  return tokens;
}

std::vector<std::string> distinct_tokens(std::string_view raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& token : tokenize(raw)) {
    if (seen.insert(token).second) out.push_back(std::move(token));
  }
  return out;
}

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> list;
    std::istringstream in{std::string(resources::stopwords_txt())};
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line.front() == '#') continue;
      list.push_back(normalize(line));
    }
    return list;
  }();
  return words;
}

bool is_stopword(std::string_view token) {
  static const std::unordered_set<std::string> lookup(stopwords().begin(),
                                                      stopwords().end());
  return lookup.contains(std::string(token));
}

}  // namespace recnet::text
