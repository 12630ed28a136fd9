#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace skillscan {

/// Half-open byte range [start, end) into a document's text.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    bool contains(std::size_t pos) const { return pos >= start && pos < end; }
    bool contains(const Span& other) const { return other.start >= start && other.end <= end; }
    bool intersects(const Span& other) const { return start < other.end && other.start < end; }

    friend bool operator==(const Span&, const Span&) = default;
    friend auto operator<=>(const Span&, const Span&) = default;
};

/// Which artifact modality a piece of text belongs to.
enum class Stream { NL, Code };

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Filesystem access failed (missing path, unreadable file).
class IoError : public Error {
  public:
    using Error::Error;
};

/// A caller-supplied parameter is outside its documented domain.
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// Structured input (trace, ledger, config, labels) is malformed.
class InputError : public Error {
  public:
    using Error::Error;
};

/// Internal data disagrees with itself (e.g. a match outside every sentence).
class ConsistencyError : public Error {
  public:
    using Error::Error;
};

/// The operation does not support the given source language.
class UnsupportedLanguageError : public Error {
  public:
    using Error::Error;
};

NLOHMANN_JSON_SERIALIZE_ENUM(Stream, {{Stream::NL, "nl"}, {Stream::Code, "code"}})

inline void to_json(nlohmann::json& j, const Span& s) { j = nlohmann::json::array({s.start, s.end}); }
inline void from_json(const nlohmann::json& j, Span& s) {
    if (!j.is_array() || j.size() != 2) {
        throw InputError("span must be a two-element array");
    }
    s.start = j.at(0).get<std::size_t>();
    s.end = j.at(1).get<std::size_t>();
}

}  // namespace skillscan

NLOHMANN_JSON_NAMESPACE_BEGIN
template <typename T>
struct adl_serializer<std::optional<T>> {
    static void to_json(json& j, const std::optional<T>& opt) {
        if (opt) {
            j = *opt;
        } else {
            j = nullptr;
        }
    }
    static void from_json(const json& j, std::optional<T>& opt) {
        if (j.is_null()) {
            opt.reset();
        } else {
            opt = j.get<T>();
        }
    }
};
NLOHMANN_JSON_NAMESPACE_END
