#pragma once

// UTF-8 decoding and per-character tokenization.

#include <cstdint>
#include <functional>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gyronet::text {

class Utf8Error : public std::runtime_error {
public:
    Utf8Error(const std::string& what, std::uint64_t byte_offset);
    std::uint64_t byte_offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Appends the UTF-8 encoding of `cp`.
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(char32_t cp);

/// Decodes a whole string; `base_offset` is added to reported error offsets.
std::u32string decode_utf8(std::string_view s, std::uint64_t base_offset = 0);

/// Unicode White_Space property.
bool is_whitespace(char32_t cp);

struct TokenizeOptions {
    bool keep_whitespace = false;
};

/// One token per Unicode scalar value.
std::vector<std::string> tokenize(std::string_view s, TokenizeOptions opts = {});
std::string detokenize(const std::vector<std::string>& tokens);

/// Streams characters from `in` in fixed-size chunks, stripping a leading
/// byte-order mark. The callback receives each scalar and its byte offset.
/// Throws Utf8Error on malformed input (offset into the stream, BOM included).
/// Returns the number of scalars delivered.
std::uint64_t for_each_char(std::istream& in, const std::function<void(char32_t, std::uint64_t)>& fn);

/// Escapes whitespace and backslash as \uXXXX so a token survives
/// whitespace-separated file formats.
std::string escape_token(const std::string& token);
std::string unescape_token(const std::string& token);

}  // namespace gyronet::text
