#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stance {

// Dense codepoint -> id map. Ids 0 and 1 are reserved for padding and
// unknown characters and never assigned to a real codepoint.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;

  Vocabulary() = default;

  // Codepoints seen at least min_count times get ids in ascending codepoint
  // order. Throws std::invalid_argument on an empty corpus.
  static Vocabulary build(std::span<const std::string> corpus, std::size_t min_count = 1);
  // Rebuilds from explicit (codepoint, id) pairs; ids must be exactly
  // 2..size-1 with no repeats.
  static Vocabulary from_entries(std::span<const std::pair<char32_t, std::uint32_t>> entries);

  std::uint32_t id(char32_t cp) const;
  std::size_t size() const { return ids_.size() + 2; }
  const std::map<char32_t, std::uint32_t>& entries() const { return ids_; }

  bool operator==(const Vocabulary&) const = default;

 private:
  std::map<char32_t, std::uint32_t> ids_;
};

// A mention string with its codepoints and vocabulary ids, truncated to at
// most max_len characters.
struct Mention {
  std::string text;
  std::u32string chars;
  std::vector<std::uint32_t> ids;
  bool truncated = false;

  // Throws std::invalid_argument for an empty string.
  static Mention make(std::string_view text, const Vocabulary& vocab, std::size_t max_len);
  std::size_t length() const { return ids.size(); }
};

}  // namespace stance
