#include "proact/codecs.hpp"

#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace proact::codecs {

namespace {

// ---------------------------------------------------------------- utf-8

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Decodes the codepoint starting at byte offset `i`; advances `i`.
// Returns false on malformed UTF-8.
bool next_codepoint(const std::string& s, std::size_t& i, std::uint32_t& cp) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    std::size_t len;
    if (b0 < 0x80) {
        cp = b0;
        len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        cp = b0 & 0x1F;
        len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
        cp = b0 & 0x0F;
        len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
        cp = b0 & 0x07;
        len = 4;
    } else {
        return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char b = byte(i + k);
        if ((b & 0xC0) != 0x80) return false;
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return true;
}

// ---------------------------------------------------------------- emoji

constexpr std::uint32_t kEmojiBase = 0x1F400;  // one codepoint per byte

std::string emoji_encode(const std::string& plaintext) {
    std::string out;
    out.reserve(plaintext.size() * 4);
    for (unsigned char b : plaintext) append_utf8(out, kEmojiBase + b);
    return out;
}

std::string emoji_decode(const std::string& encoded) {
    std::string out;
    std::size_t i = 0, index = 0;
    while (i < encoded.size()) {
        std::uint32_t cp = 0;
        if (!next_codepoint(encoded, i, cp))
            throw CodecError("emoji: malformed UTF-8 sequence", index);
        if (cp < kEmojiBase || cp > kEmojiBase + 0xFF)
            throw CodecError("emoji: codepoint outside the byte range", index);
        out += static_cast<char>(cp - kEmojiBase);
        ++index;
    }
    return out;
}

// ---------------------------------------------------------------- rot13

char rot13_char(char c) {
    if (c >= 'a' && c <= 'z') return static_cast<char>('a' + (c - 'a' + 13) % 26);
    if (c >= 'A' && c <= 'Z') return static_cast<char>('A' + (c - 'A' + 13) % 26);
    return c;
}

std::string rot13(const std::string& text) {
    std::string out = text;
    for (char& c : out) c = rot13_char(c);
    return out;
}

// ---------------------------------------------------------------- binary

std::string binary_encode(const std::string& plaintext) {
    std::string out;
    out.reserve(plaintext.size() * 9);
    bool first = true;
    for (unsigned char b : plaintext) {
        if (!first) out += ' ';
        first = false;
        for (int bit = 7; bit >= 0; --bit) out += (b >> bit) & 1 ? '1' : '0';
    }
    return out;
}

std::string binary_decode(const std::string& encoded) {
    if (encoded.empty()) return "";
    std::string out;
    std::size_t pos = 0, group = 0;
    while (true) {
        std::size_t end = encoded.find(' ', pos);
        std::string_view tok(encoded.data() + pos,
                             (end == std::string::npos ? encoded.size() : end) - pos);
        if (tok.size() != 8)
            throw CodecError("binary: group is not 8 bits", group);
        unsigned char b = 0;
        for (char c : tok) {
            if (c != '0' && c != '1')
                throw CodecError("binary: non-bit character in group", group);
            b = static_cast<unsigned char>((b << 1) | (c == '1'));
        }
        out += static_cast<char>(b);
        ++group;
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    return out;
}

// ---------------------------------------------------------------- base64

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::string& plaintext) {
    std::string out;
    out.reserve((plaintext.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= plaintext.size()) {
        std::uint32_t v = (static_cast<unsigned char>(plaintext[i]) << 16) |
                          (static_cast<unsigned char>(plaintext[i + 1]) << 8) |
                          static_cast<unsigned char>(plaintext[i + 2]);
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += kBase64Alphabet[v & 63];
        i += 3;
    }
    std::size_t rem = plaintext.size() - i;
    if (rem == 1) {
        std::uint32_t v = static_cast<unsigned char>(plaintext[i]) << 16;
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += "==";
    } else if (rem == 2) {
        std::uint32_t v = (static_cast<unsigned char>(plaintext[i]) << 16) |
                          (static_cast<unsigned char>(plaintext[i + 1]) << 8);
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

int base64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::string base64_decode(const std::string& encoded) {
    if (encoded.empty()) return "";
    if (encoded.size() % 4 != 0)
        throw CodecError("base64: length not a multiple of 4", encoded.size());

    std::size_t pad = 0;
    while (pad < 2 && encoded[encoded.size() - 1 - pad] == '=') ++pad;

    std::string out;
    out.reserve(encoded.size() / 4 * 3);
    std::uint32_t buf = 0;
    int bits = 0;
    for (std::size_t i = 0; i < encoded.size() - pad; ++i) {
        int v = base64_value(encoded[i]);
        if (v < 0) throw CodecError("base64: illegal character", i);
        buf = (buf << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((buf >> bits) & 0xFF);
        }
    }
    return out;
}

// ---------------------------------------------------------------- hex

constexpr char kHexDigits[] = "0123456789abcdef";

std::string hex_encode(const std::string& plaintext) {
    std::string out;
    out.reserve(plaintext.size() * 2);
    for (unsigned char b : plaintext) {
        out += kHexDigits[b >> 4];
        out += kHexDigits[b & 0xF];
    }
    return out;
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string hex_decode(const std::string& encoded) {
    if (encoded.size() % 2 != 0)
        throw CodecError("hex: odd number of digits", encoded.size() - 1);
    std::string out;
    out.reserve(encoded.size() / 2);
    for (std::size_t i = 0; i < encoded.size(); i += 2) {
        int hi = hex_value(encoded[i]);
        if (hi < 0) throw CodecError("hex: illegal digit", i);
        int lo = hex_value(encoded[i + 1]);
        if (lo < 0) throw CodecError("hex: illegal digit", i + 1);
        out += static_cast<char>((hi << 4) | lo);
    }
    return out;
}

// ---------------------------------------------------------------- morse

const std::map<char, std::string_view>& morse_table() {
    static const std::map<char, std::string_view> table = {
        {'A', ".-"},    {'B', "-..."},  {'C', "-.-."},  {'D', "-.."},
        {'E', "."},     {'F', "..-."},  {'G', "--."},   {'H', "...."},
        {'I', ".."},    {'J', ".---"},  {'K', "-.-"},   {'L', ".-.."},
        {'M', "--"},    {'N', "-."},    {'O', "---"},   {'P', ".--."},
        {'Q', "--.-"},  {'R', ".-."},   {'S', "..."},   {'T', "-"},
        {'U', "..-"},   {'V', "...-"},  {'W', ".--"},   {'X', "-..-"},
        {'Y', "-.--"},  {'Z', "--.."},  {'0', "-----"}, {'1', ".----"},
        {'2', "..---"}, {'3', "...--"}, {'4', "....-"}, {'5', "....."},
        {'6', "-...."}, {'7', "--..."}, {'8', "---.."}, {'9', "----."},
    };
    return table;
}

const std::map<std::string_view, char>& morse_reverse_table() {
    static const std::map<std::string_view, char> table = [] {
        std::map<std::string_view, char> t;
        for (const auto& [c, code] : morse_table()) t[code] = c;
        return t;
    }();
    return table;
}

bool morse_admissible(const std::string& plaintext) {
    for (char c : plaintext) {
        char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (up != ' ' && morse_table().find(up) == morse_table().end()) return false;
    }
    return true;
}

// Words (split on every space, empties kept) are encoded as code tokens
// joined with single spaces, then joined with " / ". Code tokens never
// contain '/', so the separator is unambiguous and spacing round-trips.
std::string morse_encode(const std::string& plaintext) {
    std::vector<std::string> words(1);
    for (std::size_t i = 0; i < plaintext.size(); ++i) {
        char up = static_cast<char>(std::toupper(static_cast<unsigned char>(plaintext[i])));
        if (up == ' ') {
            words.emplace_back();
            continue;
        }
        auto it = morse_table().find(up);
        if (it == morse_table().end())
            throw CodecError("morse: character outside A-Z, 0-9 and space", i);
        std::string& cur = words.back();
        if (!cur.empty()) cur += ' ';
        cur += it->second;
    }
    std::string out;
    for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) out += " / ";
        out += words[w];
    }
    return out;
}

std::string morse_decode(const std::string& encoded) {
    if (encoded.empty()) return "";

    std::vector<std::string> words;
    std::size_t pos = 0;
    while (true) {
        std::size_t sep = encoded.find(" / ", pos);
        if (sep == std::string::npos) {
            words.push_back(encoded.substr(pos));
            break;
        }
        words.push_back(encoded.substr(pos, sep - pos));
        pos = sep + 3;
    }

    std::string out;
    std::size_t token_index = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) out += ' ';
        std::istringstream in(words[w]);
        std::string tok;
        while (in >> tok) {
            auto it = morse_reverse_table().find(tok);
            if (it == morse_reverse_table().end())
                throw CodecError("morse: unknown code token", token_index);
            // Morse carries no case; decode to lowercase so lowercase
            // plaintext (the common case) round-trips exactly.
            out += static_cast<char>(
                std::tolower(static_cast<unsigned char>(it->second)));
            ++token_index;
        }
    }
    return out;
}

}  // namespace

bool is_admissible(Strategy s, const std::string& plaintext) {
    if (s == Strategy::free_form) return false;
    if (s == Strategy::morse) return morse_admissible(plaintext);
    return true;
}

std::string encode(Strategy s, const std::string& plaintext) {
    switch (s) {
        case Strategy::emoji: return emoji_encode(plaintext);
        case Strategy::rot13: return rot13(plaintext);
        case Strategy::binary: return binary_encode(plaintext);
        case Strategy::base64: return base64_encode(plaintext);
        case Strategy::hex: return hex_encode(plaintext);
        case Strategy::morse: return morse_encode(plaintext);
        case Strategy::free_form: break;
    }
    throw std::invalid_argument("free-form is not an encodable strategy");
}

std::string decode(Strategy s, const std::string& encoded) {
    switch (s) {
        case Strategy::emoji: return emoji_decode(encoded);
        case Strategy::rot13: return rot13(encoded);
        case Strategy::binary: return binary_decode(encoded);
        case Strategy::base64: return base64_decode(encoded);
        case Strategy::hex: return hex_decode(encoded);
        case Strategy::morse: return morse_decode(encoded);
        case Strategy::free_form: break;
    }
    throw std::invalid_argument("free-form is not a decodable strategy");
}

const std::vector<Strategy>& strategy_catalog() {
    static const std::vector<Strategy> catalog = {
        Strategy::emoji,  Strategy::rot13, Strategy::binary,
        Strategy::base64, Strategy::hex,   Strategy::morse,
    };
    return catalog;
}

}  // namespace proact::codecs
