#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace stance::classic {

// All metrics work on Unicode codepoints; inputs are UTF-8.

// Unit-cost insert/delete/substitute distance.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t lcs(std::u32string_view a, std::u32string_view b);
// Jaro similarity with window floor(max/2)-1 plus the Winkler prefix boost
// (scale 0.1, at most 4 characters). Exactly symmetric.
double jaro_winkler(std::u32string_view a, std::u32string_view b);

// American Soundex of one token: diacritics are stripped, letters
// uppercased, anything else ignored. A token without letters codes as
// "0000".
std::string soundex(std::string_view token);
// Space-joined per-token codes of a whole mention.
std::string soundex_mention(std::string_view text);

enum class Metric { kLev, kJw, kLcs, kSdx };

std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);

// Higher is more similar, in [0, 1]:
//   lev  1 - lev / max(|a|, |b|)
//   lcs  lcs / max(|a|, |b|)
//   jw   jaro_winkler
//   sdx  normalized lev over soundex_mention codes
// Two empty strings are identical (1.0).
double similarity(Metric m, std::string_view a, std::string_view b);

}  // namespace stance::classic
