#include "stance/synth.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

namespace stance {

namespace {

constexpr std::array<const char*, 24> kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t",
                                                 "v", "z", "br", "ch", "dr", "gr", "kl", "sh", "st", "th", "tr", "w"};
constexpr std::array<const char*, 8> kVowels = {"a", "e", "i", "o", "u", "ai", "ei", "ou"};
constexpr std::array<const char*, 10> kCodas = {"", "", "", "n", "r", "l", "s", "m", "k", "t"};
constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

class NameMaker {
 public:
  explicit NameMaker(std::mt19937_64& rng) : rng_(rng) {}

  std::string word(std::size_t min_syl, std::size_t max_syl) {
    std::string w;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(min_syl, max_syl)(rng_);
    for (std::size_t i = 0; i < n; ++i) {
      w += pick(kOnsets);
      w += pick(kVowels);
      w += pick(kCodas);
    }
    return capitalize(w);
  }

  std::string corrupt(const std::string& s) {
    std::string out = s;
    const int edits = std::uniform_int_distribution<int>(1, 2)(rng_);
    for (int k = 0; k < edits; ++k) {
      std::vector<std::size_t> letters;
      for (std::size_t i = 0; i < out.size(); ++i)
        if (std::isalpha(static_cast<unsigned char>(out[i]))) letters.push_back(i);
      if (letters.empty()) break;
      const std::size_t at = letters[std::uniform_int_distribution<std::size_t>(0, letters.size() - 1)(rng_)];
      const char c = kLetters[std::uniform_int_distribution<std::size_t>(0, kLetters.size() - 1)(rng_)];
      switch (std::uniform_int_distribution<int>(0, 2)(rng_)) {
        case 0: out[at] = std::isupper(static_cast<unsigned char>(out[at])) ? static_cast<char>(c - 'a' + 'A') : c; break;
        case 1: out.insert(out.begin() + static_cast<std::ptrdiff_t>(at) + 1, c); break;
        default: if (letters.size() > 2) out.erase(at, 1); break;
      }
    }
    return out;
  }

  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

 private:
  template <std::size_t N>
  const char* pick(const std::array<const char*, N>& xs) {
    return xs[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng_)];
  }
  std::mt19937_64& rng_;
};

}  // namespace

AliasGraph synthesize_corpus(const SynthConfig& config) {
  std::mt19937_64 rng(config.seed);
  NameMaker names(rng);
  AliasGraph g;
  std::unordered_set<std::string> canonical_names;
  char id[32];

  for (std::size_t e = 0; e < config.entities; ++e) {
    std::string first, last, canonical;
    do {
      first = names.word(1, 2);
      last = names.word(2, 3);
      canonical = first + " " + last;
    } while (!canonical_names.insert(canonical).second);

    std::snprintf(id, sizeof id, "E%05zu", e);
    std::optional<double> weight;
    if (config.weighted) weight = 1.0 / std::pow(static_cast<double>(e % 97 + 1), 0.8);

    std::vector<std::string> aliases = {canonical};
    if (names.chance(config.p_permutation)) aliases.push_back(last + ", " + first);
    if (names.chance(config.p_initialism)) aliases.push_back(first.substr(0, 1) + ". " + last);
    if (names.chance(config.p_corruption)) aliases.push_back(names.corrupt(canonical));
    if (names.chance(config.p_last_name)) aliases.push_back(last);
    if (aliases.size() < 2) aliases.push_back(names.chance(0.5) ? last + ", " + first : names.corrupt(canonical));
    for (const std::string& a : aliases) g.add(id, a, weight);
  }
  return g;
}

void write_graph(std::ostream& out, const AliasGraph& g, bool with_weights) {
  for (std::uint32_t e = 0; e < g.entity_count(); ++e) {
    for (std::uint32_t m : g.aliases_of(e)) {
      out << g.entity_id(e) << '\t' << g.mention(m);
      if (with_weights) out << '\t' << g.entity_weight(e);
      out << '\n';
    }
  }
}

}  // namespace stance
