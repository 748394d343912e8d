#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace selfvocab::utf8 {

// Decodes one UTF-8 sequence starting at s[i]. On success advances i past the
// sequence and returns the codepoint; returns -1 on malformed input (i is
// advanced by one byte so callers can resynchronize).
std::int32_t decode_one(std::string_view s, std::size_t &i);

// True when the whole string is well-formed UTF-8.
bool valid(std::string_view s);

// Codepoint count; malformed bytes count as one codepoint each.
std::size_t length(std::string_view s);

// Appends the UTF-8 encoding of cp to out.
void append(std::string &out, std::int32_t cp);

// Deterministic, locale-independent lowercasing of ASCII and Latin-1 letters.
// Codepoints outside those ranges pass through unchanged.
std::int32_t lower(std::int32_t cp);
std::string lower_copy(std::string_view s);

} // namespace selfvocab::utf8
