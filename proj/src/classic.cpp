#include "stance/classic.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "stance/utf8.hpp"

namespace stance::classic {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t lcs(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double jaro_winkler(std::u32string_view a, std::u32string_view b) {
  // Canonical argument order makes the result bit-identical under swapping.
  if (a.size() > b.size() || (a.size() == b.size() && a > b)) std::swap(a, b);
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty()) return 0.0;

  const std::size_t longest = std::max(a.size(), b.size());
  const std::size_t window = longest / 2 > 0 ? longest / 2 - 1 : 0;
  std::vector<bool> a_hit(a.size(), false), b_hit(b.size(), false);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(b.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!b_hit[j] && a[i] == b[j]) {
        a_hit[i] = b_hit[j] = true;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;

  std::size_t half_transpositions = 0;
  for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
    if (!a_hit[i]) continue;
    while (!b_hit[j]) ++j;
    if (a[i] != b[j]) ++half_transpositions;
    ++j;
  }
  const double m = static_cast<double>(matches);
  const double t = static_cast<double>(half_transpositions / 2);
  const double jaro = (m / a.size() + m / b.size() + (m - t) / m) / 3.0;

  std::size_t prefix = 0;
  while (prefix < 4 && prefix < a.size() && a[prefix] == b[prefix]) ++prefix;
  return jaro + prefix * 0.1 * (1.0 - jaro);
}

namespace {

// NFD, then keep ASCII letters only, uppercased.
std::string ascii_letters(std::string_view token) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  icu::UnicodeString decomposed;
  if (U_SUCCESS(status)) {
    decomposed = nfd->normalize(icu::UnicodeString::fromUTF8(icu::StringPiece(token.data(),
                                                                                static_cast<int32_t>(token.size()))),
                                status);
  }
  if (U_FAILURE(status)) decomposed = icu::UnicodeString::fromUTF8(std::string(token));

  std::string out;
  for (int32_t i = 0; i < decomposed.length(); ++i) {
    const char16_t c = decomposed.charAt(i);
    if (c < 128 && std::isalpha(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

char soundex_digit(char c) {
  switch (c) {
    case 'B': case 'F': case 'P': case 'V':
      return '1';
    case 'C': case 'G': case 'J': case 'K': case 'Q': case 'S': case 'X': case 'Z':
      return '2';
    case 'D': case 'T':
      return '3';
    case 'L':
      return '4';
    case 'M': case 'N':
      return '5';
    case 'R':
      return '6';
    case 'H': case 'W':
      return 'h';  // transparent
    default:
      return '0';  // vowels and Y separate runs
  }
}

}  // namespace

std::string soundex(std::string_view token) {
  const std::string letters = ascii_letters(token);
  if (letters.empty()) return "0000";
  std::string code(1, letters[0]);
  char last = soundex_digit(letters[0]);
  for (std::size_t i = 1; i < letters.size() && code.size() < 4; ++i) {
    const char d = soundex_digit(letters[i]);
    if (d == 'h') continue;
    if (d != '0' && d != last) code.push_back(d);
    last = d;
  }
  code.resize(4, '0');
  return code;
}

std::string soundex_mention(std::string_view text) {
  std::string out;
  for (const std::u32string& token : utf8::tokens(utf8::decode(text))) {
    if (!out.empty()) out.push_back(' ');
    out += soundex(utf8::encode(token));
  }
  return out;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kLev: return "lev";
    case Metric::kJw: return "jw";
    case Metric::kLcs: return "lcs";
    case Metric::kSdx: return "sdx";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (Metric m : {Metric::kLev, Metric::kJw, Metric::kLcs, Metric::kSdx})
    if (metric_name(m) == name) return m;
  return std::nullopt;
}

namespace {

double normalized_lev(std::u32string_view a, std::u32string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

}  // namespace

double similarity(Metric m, std::string_view a, std::string_view b) {
  if (m == Metric::kSdx) return normalized_lev(utf8::decode(soundex_mention(a)), utf8::decode(soundex_mention(b)));
  const std::u32string ua = utf8::decode(a), ub = utf8::decode(b);
  switch (m) {
    case Metric::kLev:
      return normalized_lev(ua, ub);
    case Metric::kJw:
      return jaro_winkler(ua, ub);
    case Metric::kLcs: {
      const std::size_t longest = std::max(ua.size(), ub.size());
      return longest == 0 ? 1.0 : static_cast<double>(lcs(ua, ub)) / static_cast<double>(longest);
    }
    default:
      return 0.0;
  }
}

}  // namespace stance::classic
