#include "proact/json_util.hpp"

#include <iomanip>
#include <sstream>

namespace proact {
namespace {

// One-past-the-end of the balanced object starting at `start`
// (text[start] == '{'), or npos when it never closes.
std::size_t balanced_end(const std::string& text, std::size_t start) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (quote) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string::npos;
}

void append_escaped(std::string& out, char c) {
    switch (c) {
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                std::ostringstream esc;
                esc << "\\u" << std::hex << std::setw(4) << std::setfill('0')
                    << static_cast<int>(static_cast<unsigned char>(c));
                out += esc.str();
            } else {
                out += c;
            }
    }
}

// Rewrites single-quoted strings as double-quoted ones and escapes raw
// control characters inside strings so nlohmann can parse the result.
std::string normalize(const std::string& span) {
    std::string out;
    out.reserve(span.size());
    char quote = 0;
    for (std::size_t i = 0; i < span.size(); ++i) {
        char c = span[i];
        if (!quote) {
            if (c == '\'' || c == '"') {
                quote = c;
                out += '"';
            } else {
                out += c;
            }
            continue;
        }
        if (c == '\\' && i + 1 < span.size()) {
            char next = span[i + 1];
            if (quote == '\'' && next == '\'') {
                out += '\'';
            } else {
                out += '\\';
                out += next;
            }
            ++i;
            continue;
        }
        if (c == quote) {
            quote = 0;
            out += '"';
            continue;
        }
        if (quote == '\'' && c == '"') {
            out += "\\\"";
            continue;
        }
        append_escaped(out, c);
    }
    return out;
}

}  // namespace

std::optional<nlohmann::json> extract_first_json_object(
    const std::string& text, const std::vector<std::string>& required_keys) {
    for (std::size_t i = text.find('{'); i != std::string::npos;
         i = text.find('{', i + 1)) {
        std::size_t end = balanced_end(text, i);
        if (end == std::string::npos) continue;
        nlohmann::json parsed =
            nlohmann::json::parse(normalize(text.substr(i, end - i)),
                                  /*cb=*/nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.is_object()) continue;
        bool has_all = true;
        for (const auto& key : required_keys) {
            if (!parsed.contains(key)) {
                has_all = false;
                break;
            }
        }
        if (has_all) return parsed;
    }
    return std::nullopt;
}

}  // namespace proact
