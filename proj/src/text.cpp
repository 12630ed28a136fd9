#include "skillscan/text.hpp"

#include <array>
#include <cstdio>

namespace skillscan::text {

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

bool letter_bounded(std::string_view text, Span span) {
    if (span.start > 0 && is_ascii_letter(text[span.start - 1])) {
        return false;
    }
    if (span.end < text.size() && is_ascii_letter(text[span.end])) {
        return false;
    }
    return true;
}

bool left_alnum_bounded(std::string_view text, Span span) {
    return span.start == 0 || !is_ascii_alnum(text[span.start - 1]);
}

std::size_t line_of(std::string_view text, std::size_t pos) {
    std::size_t line = 1;
    const std::size_t limit = std::min(pos, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (text[i] == '\n') {
            ++line;
        }
    }
    return line;
}

std::size_t column_of(std::string_view text, std::size_t pos) {
    const std::size_t limit = std::min(pos, text.size());
    const auto nl = limit == 0 ? std::string_view::npos : text.rfind('\n', limit - 1);
    return nl == std::string_view::npos ? limit + 1 : limit - nl;
}

Span line_span(std::string_view text, std::size_t pos) {
    pos = std::min(pos, text.size());
    std::size_t start = 0;
    if (pos > 0) {
        const auto nl = text.rfind('\n', pos - 1);
        start = nl == std::string_view::npos ? 0 : nl + 1;
    }
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
        end = text.size();
    }
    return {start, end};
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf.data(), 16);
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char a = s[i];
        char b = prefix[i];
        if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
        if (b >= 'A' && b <= 'Z') b = static_cast<char>(b - 'A' + 'a');
        if (a != b) {
            return false;
        }
    }
    return true;
}

std::optional<std::string> url_host(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i < scheme_end; ++i) {
        const char c = url[i];
        if (!is_ascii_alnum(c) && c != '+' && c != '-' && c != '.') {
            return std::nullopt;
        }
    }
    std::size_t pos = scheme_end + 3;
    std::size_t end = pos;
    while (end < url.size()) {
        const char c = url[end];
        if (c == '/' || c == '?' || c == '#' || c == '\'' || c == '"' || c == '`' || is_space(c) || c == ')' ||
            c == '$' || c == '{') {
            break;
        }
        ++end;
    }
    std::string_view authority = url.substr(pos, end - pos);
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
        authority.remove_prefix(at + 1);
    }
    if (const auto colon = authority.find(':'); colon != std::string_view::npos) {
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) {
        return std::nullopt;
    }
    return to_lower(authority);
}

bool is_ipv4_literal(std::string_view host) {
    int parts = 0;
    std::size_t i = 0;
    while (i <= host.size()) {
        std::size_t j = i;
        int value = 0;
        while (j < host.size() && is_ascii_digit(host[j])) {
            value = value * 10 + (host[j] - '0');
            if (value > 255 || j - i >= 3) {
                return false;
            }
            ++j;
        }
        if (j == i) {
            return false;
        }
        ++parts;
        if (j == host.size()) {
            break;
        }
        if (host[j] != '.') {
            return false;
        }
        i = j + 1;
    }
    return parts == 4;
}

}  // namespace skillscan::text

namespace skillscan::base64 {

namespace {
constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int value_of(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

bool is_alphabet_char(char c) { return value_of(c) >= 0; }

std::string encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const auto n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const auto n = static_cast<unsigned char>(bytes[i]) << 16;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const auto n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

std::optional<std::string> decode(std::string_view encoded) {
    while (!encoded.empty() && encoded.back() == '=') {
        encoded.remove_suffix(1);
    }
    if (encoded.size() % 4 == 1) {
        return std::nullopt;
    }
    std::string out;
    out.reserve(encoded.size() * 3 / 4);
    std::uint32_t buffer = 0;
    int bits = 0;
    for (char c : encoded) {
        const int v = value_of(c);
        if (v < 0) {
            return std::nullopt;
        }
        buffer = (buffer << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((buffer >> bits) & 0xFF);
        }
    }
    return out;
}

}  // namespace skillscan::base64
