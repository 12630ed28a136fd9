#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillscan/common.hpp"

namespace skillscan::text {

inline bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_alnum(char c) { return is_ascii_letter(c) || is_ascii_digit(c); }
inline bool is_ident_char(char c) { return is_ascii_alnum(c) || c == '_' || c == '$'; }
inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string to_lower(std::string_view s);

/// True when neither neighbour of `span` is an ASCII letter.
bool letter_bounded(std::string_view text, Span span);

/// True when the character before `span` (if any) is not alphanumeric.
bool left_alnum_bounded(std::string_view text, Span span);

/// 1-based line number of byte offset `pos`.
std::size_t line_of(std::string_view text, std::size_t pos);

/// 1-based column (in bytes) of byte offset `pos`.
std::size_t column_of(std::string_view text, std::size_t pos);

/// Span of the full line containing `pos` (without the trailing newline).
Span line_span(std::string_view text, std::size_t pos);

/// 64-bit FNV-1a; stable across platforms, used for digests and marker namespaces.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

/// Hostname of an http(s)/ws(s)/ftp URL embedded at the start of `url`, lowercased.
std::optional<std::string> url_host(std::string_view url);

/// True if `host` is a dotted-quad IPv4 literal.
bool is_ipv4_literal(std::string_view host);

bool starts_with_icase(std::string_view s, std::string_view prefix);

}  // namespace skillscan::text

namespace skillscan::base64 {

/// Standard alphabet, '=' padded.
std::string encode(std::string_view bytes);

/// Decodes standard base64. Accepts missing padding; rejects stray characters.
std::optional<std::string> decode(std::string_view encoded);

bool is_alphabet_char(char c);

}  // namespace skillscan::base64
