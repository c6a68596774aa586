#pragma once

#include <string>
#include <string_view>

namespace hatebench::unicode {

/// Canonical composition (NFC). Invalid UTF-8 sequences become U+FFFD.
std::string nfc(std::string_view utf8);

/// Full Unicode lowercase mapping under the root locale.
std::string to_lower(std::string_view utf8);

/// Decodes the code point at `pos` and advances `pos` past it.
/// Invalid bytes decode as U+FFFD, one byte at a time.
char32_t next_code_point(std::string_view utf8, std::size_t& pos);

/// Unicode White_Space property.
bool is_space(char32_t c);

/// General category P*, plus every printable ASCII non-alphanumeric.
bool is_punct(char32_t c);

bool is_digit(char32_t c);

}  // namespace hatebench::unicode
