#include "gyronet/text.hpp"

#include <array>
#include <cstdio>

namespace gyronet::text {

Utf8Error::Utf8Error(const std::string& what, std::uint64_t byte_offset)
    : std::runtime_error(what + " at byte offset " + std::to_string(byte_offset)), offset_(byte_offset) {}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(char32_t cp) {
    std::string s;
    append_utf8(s, cp);
    return s;
}

namespace {

// Incremental decoder so the streaming reader can cross chunk boundaries.
class Decoder {
public:
    // Returns true when a full scalar is available in `cp`.
    bool feed(unsigned char b, std::uint64_t offset, char32_t& cp) {
        if (need_ == 0) {
            start_ = offset;
            if (b < 0x80) {
                cp = b;
                return true;
            }
            if (b >= 0xC2 && b <= 0xDF) {
                need_ = 1;
                acc_ = b & 0x1F;
                min_ = 0x80;
            } else if (b >= 0xE0 && b <= 0xEF) {
                need_ = 2;
                acc_ = b & 0x0F;
                min_ = 0x800;
            } else if (b >= 0xF0 && b <= 0xF4) {
                need_ = 3;
                acc_ = b & 0x07;
                min_ = 0x10000;
            } else {
                throw Utf8Error("invalid UTF-8 lead byte", offset);
            }
            return false;
        }
        if ((b & 0xC0) != 0x80) {
            throw Utf8Error("truncated UTF-8 sequence", start_);
        }
        acc_ = (acc_ << 6) | (b & 0x3F);
        if (--need_ > 0) {
            return false;
        }
        if (acc_ < min_ || acc_ > 0x10FFFF || (acc_ >= 0xD800 && acc_ <= 0xDFFF)) {
            throw Utf8Error("invalid UTF-8 scalar value", start_);
        }
        cp = acc_;
        return true;
    }

    void finish() const {
        if (need_ != 0) {
            throw Utf8Error("truncated UTF-8 sequence at end of input", start_);
        }
    }

private:
    int need_ = 0;
    char32_t acc_ = 0;
    char32_t min_ = 0;
    std::uint64_t start_ = 0;
};

}  // namespace

std::u32string decode_utf8(std::string_view s, std::uint64_t base_offset) {
    std::u32string out;
    Decoder d;
    char32_t cp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (d.feed(static_cast<unsigned char>(s[i]), base_offset + i, cp)) {
            out.push_back(cp);
        }
    }
    d.finish();
    return out;
}

bool is_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20: case 0x85: case 0xA0:
        case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::vector<std::string> tokenize(std::string_view s, TokenizeOptions opts) {
    std::vector<std::string> tokens;
    std::size_t begin = 0;
    if (s.substr(0, 3) == "\xEF\xBB\xBF") begin = 3;
    for (char32_t cp : decode_utf8(s.substr(begin), begin)) {
        if (!opts.keep_whitespace && is_whitespace(cp)) continue;
        tokens.push_back(encode_utf8(cp));
    }
    return tokens;
}

std::string detokenize(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += t;
    return out;
}

std::uint64_t for_each_char(std::istream& in, const std::function<void(char32_t, std::uint64_t)>& fn) {
    std::array<char, 1 << 16> buf{};
    Decoder d;
    std::uint64_t offset = 0;
    std::uint64_t count = 0;
    int bom_matched = 0;
    static constexpr unsigned char kBom[3] = {0xEF, 0xBB, 0xBF};
    char32_t cp = 0;
    auto deliver = [&](unsigned char b, std::uint64_t at) {
        if (d.feed(b, at, cp)) {
            fn(cp, at);
            ++count;
        }
    };
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i, ++offset) {
            const auto b = static_cast<unsigned char>(buf[i]);
            if (offset < 3 && bom_matched == static_cast<int>(offset)) {
                if (b == kBom[offset]) {
                    ++bom_matched;
                    continue;
                }
                for (int k = 0; k < bom_matched; ++k) deliver(kBom[k], static_cast<std::uint64_t>(k));
                bom_matched = -1;
            }
            deliver(b, offset);
        }
    }
    if (bom_matched > 0 && bom_matched < 3) {
        for (int k = 0; k < bom_matched; ++k) deliver(kBom[k], static_cast<std::uint64_t>(k));
    }
    d.finish();
    return count;
}

std::string escape_token(const std::string& token) {
    std::string out;
    for (char32_t cp : decode_utf8(token)) {
        if (cp == U'\\' || is_whitespace(cp) || cp < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04X", static_cast<unsigned>(cp));
            out += buf;
        } else {
            append_utf8(out, cp);
        }
    }
    return out;
}

std::string unescape_token(const std::string& token) {
    std::string out;
    for (std::size_t i = 0; i < token.size(); ++i) {
        if (token[i] == '\\' && i + 5 < token.size() && token[i + 1] == 'u') {
            const std::string hex = token.substr(i + 2, 4);
            std::size_t used = 0;
            const unsigned long v = std::stoul(hex, &used, 16);
            if (used != 4) throw std::invalid_argument("bad escape in token '" + token + "'");
            append_utf8(out, static_cast<char32_t>(v));
            i += 5;
        } else if (token[i] == '\\') {
            throw std::invalid_argument("bad escape in token '" + token + "'");
        } else {
            out.push_back(token[i]);
        }
    }
    return out;
}

}  // namespace gyronet::text
