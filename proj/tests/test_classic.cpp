#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stance/classic.hpp"
#include "stance/utf8.hpp"

using namespace stance::classic;
using stance::utf8::decode;

static std::u32string u32(const std::string& s) { return decode(s); }

TEST_CASE("levenshtein") {
  CHECK(levenshtein(U"", U"abc") == 3);
  CHECK(levenshtein(U"abc", U"") == 3);
  CHECK(levenshtein(U"kitten", U"sitting") == 3);
  CHECK(levenshtein(U"naïve", U"naive") == 1);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::u32string a = u32(oracle::random_string(rng, 12)), b = u32(oracle::random_string(rng, 12)),
                         c = u32(oracle::random_string(rng, 12));
    CHECK(levenshtein(a, a) == 0);
    CHECK(levenshtein(a, b) == oracle::levenshtein_dp(a, b));
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK((levenshtein(a, b) == 0) == (a == b));
    CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST_CASE("lcs") {
  CHECK(lcs(U"ABCBDAB", U"BDCABA") == 4);
  CHECK(lcs(U"abc", U"") == 0);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const std::u32string a = u32(oracle::random_string(rng, 12)), b = u32(oracle::random_string(rng, 12));
    CHECK(lcs(a, a) == a.size());
    CHECK(lcs(a, b) == oracle::lcs_dp(a, b));
    CHECK(levenshtein(a, b) >= std::max(a.size(), b.size()) - lcs(a, b));
  }
}

TEST_CASE("jaro_winkler") {
  CHECK(jaro_winkler(U"MARTHA", U"MARHTA") == doctest::Approx(0.9611).epsilon(1e-4));
  CHECK(jaro_winkler(U"DIXON", U"DICKSONX") == doctest::Approx(0.8133).epsilon(1e-4));
  CHECK(jaro_winkler(U"abc", U"abc") == 1.0);
  CHECK(jaro_winkler(U"abc", U"xyz") == 0.0);
  CHECK(jaro_winkler(U"", U"") == 1.0);
  CHECK(jaro_winkler(U"", U"a") == 0.0);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::u32string a = u32(oracle::random_string(rng, 12)), b = u32(oracle::random_string(rng, 12));
    const double ab = jaro_winkler(a, b);
    CHECK(ab == jaro_winkler(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("soundex") {
  CHECK(soundex("Robert") == "R163");
  CHECK(soundex("Rupert") == "R163");
  CHECK(soundex("Ashcraft") == "A261");
  CHECK(soundex("A") == "A000");
  CHECK(soundex("Tymczak") == "T522");
  CHECK(soundex("Pfister") == "P236");
  CHECK(soundex("Honeyman") == "H555");
  CHECK(soundex("robert") == "R163");
  CHECK(soundex("Émile") == "E540");
  CHECK(soundex("Müller") == "M460");
  CHECK(soundex("123") == "0000");
  CHECK(soundex("O'Brien") == "O165");
  CHECK(soundex_mention("Robert  Ashcraft") == "R163 A261");
  CHECK(soundex_mention("") == "");
}

TEST_CASE("normalized similarities") {
  CHECK(similarity(Metric::kLev, "kitten", "sitting") == doctest::Approx(1.0 - 3.0 / 7));
  CHECK(similarity(Metric::kLcs, "ABCBDAB", "BDCABA") == doctest::Approx(4.0 / 7));
  CHECK(similarity(Metric::kSdx, "Robert Smith", "Rupert Smyth") == 1.0);
  CHECK(similarity(Metric::kSdx, "Robert", "Robert Smith") == doctest::Approx(1.0 - 5.0 / 9));
  CHECK(similarity(Metric::kLev, "", "") == 1.0);

  for (Metric m : {Metric::kLev, Metric::kJw, Metric::kLcs, Metric::kSdx}) {
    CHECK(parse_metric(metric_name(m)) == m);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      const std::string a = oracle::random_string(rng, 10, "ab cd", 1);
      const std::string b = oracle::random_string(rng, 10, "ab cd", 1);
      const double s = similarity(m, a, b);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      CHECK(similarity(m, a, a) == 1.0);
    }
  }
  CHECK_FALSE(parse_metric("hamming").has_value());
}
