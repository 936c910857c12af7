#include "stance/vocab.hpp"

#include <spdlog/spdlog.h>

#include <stdexcept>

#include "stance/utf8.hpp"

namespace stance {

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t min_count) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<char32_t, std::size_t> counts;
  for (const std::string& m : corpus) {
    for (char32_t cp : utf8::decode(m)) ++counts[cp];
  }
  Vocabulary v;
  std::uint32_t next = 2;
  for (const auto& [cp, n] : counts) {
    if (n >= min_count) v.ids_.emplace(cp, next++);
  }
  return v;
}

Vocabulary Vocabulary::from_entries(std::span<const std::pair<char32_t, std::uint32_t>> entries) {
  Vocabulary v;
  std::vector<bool> used(entries.size() + 2, false);
  for (const auto& [cp, id] : entries) {
    if (id < 2 || id >= used.size() || used[id]) {
      throw std::invalid_argument("vocabulary ids must be dense in [2, size)");
    }
    used[id] = true;
    if (!v.ids_.emplace(cp, id).second) throw std::invalid_argument("duplicate codepoint in vocabulary");
  }
  return v;
}

std::uint32_t Vocabulary::id(char32_t cp) const {
  auto it = ids_.find(cp);
  return it == ids_.end() ? kUnk : it->second;
}

Mention Mention::make(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  Mention m;
  m.text = std::string(text);
  m.chars = utf8::decode(text);
  if (m.chars.empty()) throw std::invalid_argument("empty mention");
  if (m.chars.size() > max_len) {
    spdlog::warn("mention truncated to {} characters: {}", max_len, m.text);
    m.chars.resize(max_len);
    m.truncated = true;
  }
  m.ids.reserve(m.chars.size());
  for (char32_t cp : m.chars) m.ids.push_back(vocab.id(cp));
  return m;
}

}  // namespace stance
