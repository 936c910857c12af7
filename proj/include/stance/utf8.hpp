#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stance::utf8 {

// Invalid or truncated sequences decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

// Splits on ASCII whitespace, dropping empty tokens.
std::vector<std::u32string> tokens(std::u32string_view text);

}  // namespace stance::utf8
