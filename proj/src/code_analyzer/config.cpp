#include <algorithm>
#include <fstream>

#include "skillscan/code_analyzer.hpp"
#include "skillscan/text.hpp"

namespace skillscan {

namespace {

std::string_view terminal_name(std::string_view path) {
    const auto dot = path.rfind('.');
    return dot == std::string_view::npos ? path : path.substr(dot + 1);
}

bool dotted_suffix(std::string_view path, std::string_view entry) {
    if (path == entry) return true;
    return path.size() > entry.size() && path.substr(path.size() - entry.size()) == entry &&
           path[path.size() - entry.size() - 1] == '.';
}

const char* const kSinkKeys[] = {"network", "logging", "file_io"};

}  // namespace

std::string_view to_string(SinkCategory c) {
    switch (c) {
        case SinkCategory::Network: return "network";
        case SinkCategory::Logging: return "logging";
        case SinkCategory::FileIO: return "file_io";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const Scope& s) {
    if (s.top_level) {
        j = {{"kind", "module"}};
    } else {
        j = {{"kind", "function"}, {"name", s.name}};
    }
}

void from_json(const nlohmann::json& j, Scope& s) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "module") {
        s = Scope::module();
    } else if (kind == "function") {
        s = Scope::function(j.at("name").get<std::string>());
    } else {
        throw InputError("unknown scope kind '" + kind + "'");
    }
}

SinkTable::SinkTable(std::vector<SinkEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void SinkTable::add(SinkEntry entry) {
    if (entry.callee.empty()) throw ArgumentError("sink callee must not be empty");
    auto same = [&](const SinkEntry& e) { return e.callee == entry.callee; };
    if (auto it = std::find_if(entries_.begin(), entries_.end(), same); it != entries_.end()) {
        // Keep the most severe category when an entry is listed twice.
        if (severity_rank(entry.category) < severity_rank(it->category)) it->category = entry.category;
        return;
    }
    entries_.push_back(std::move(entry));
}

SinkTable SinkTable::defaults() {
    using S = SinkCategory;
    SinkTable t;
    for (const char* c : {"requests.post", "requests.get", "requests.put", "requests.patch", "requests.request",
                          "http.request", "https.request", "fetch", "urllib.urlopen", "urllib.request.urlopen",
                          "urlopen", "axios", "axios.post", "axios.get", "axios.put", "axios.patch",
                          "axios.request", "httpx.post", "httpx.get", "XMLHttpRequest.send", "navigator.sendBeacon",
                          "socket.send", "socket.sendall"}) {
        t.add({c, S::Network});
    }
    for (const char* c : {"print", "console.log", "console.error", "console.info", "console.warn", "console.debug",
                          "logger.info", "logger.debug", "logger.warning", "logger.error", "logging.info",
                          "logging.debug", "logging.warning", "logging.error", "sys.stdout.write",
                          "sys.stderr.write", "process.stdout.write", "process.stderr.write", "pprint"}) {
        t.add({c, S::Logging});
    }
    for (const char* c : {"open", "fs.writeFile", "fs.writeFileSync", "fs.appendFile", "fs.appendFileSync",
                          "json.dump", "yaml.dump", "write_text", "writelines", "write"}) {
        t.add({c, S::FileIO});
    }
    return t;
}

std::optional<SinkEntry> SinkTable::lookup(std::string_view callee_path) const {
    const std::string_view terminal = terminal_name(callee_path);
    const SinkEntry* best = nullptr;
    bool best_is_path = false;
    for (const auto& e : entries_) {
        const bool dotted = e.callee.find('.') != std::string::npos;
        const bool path_hit = dotted && dotted_suffix(callee_path, e.callee);
        const bool terminal_hit = !dotted && (e.callee == terminal || e.callee == callee_path);
        if (!path_hit && !terminal_hit) continue;
        const bool is_path = path_hit || e.callee == callee_path;
        if (!best || (is_path && !best_is_path) ||
            (is_path == best_is_path && severity_rank(e.category) < severity_rank(best->category))) {
            best = &e;
            best_is_path = is_path;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

nlohmann::json SinkTable::to_json() const {
    nlohmann::json out = {{"network", nlohmann::json::array()},
                          {"logging", nlohmann::json::array()},
                          {"file_io", nlohmann::json::array()}};
    for (const auto& e : entries_) out[std::string(to_string(e.category))].push_back(e.callee);
    return out;
}

CodeConfig CodeConfig::defaults() {
    CodeConfig c;
    c.sinks = SinkTable::defaults();
    c.placeholder_patterns = {
        R"(your[-_ ]?(?:api[-_ ]?)?(?:key|token|secret|password|credential)s?[-_ ]?here)",
        R"(<\s*your[-_ ][^>]*>)",
        R"((?:^|[^a-z0-9])x{3,})",
        R"(example)",
        R"(change[-_ ]?me)",
        R"(placeholder)",
        R"(dummy)",
        R"(replace[-_ ]?(?:me|with))",
        R"(insert[-_ ]?your)",
    };
    c.fetch_execute_signatures = {
        R"(\bcurl\b)",
        R"(\bwget\b)",
        R"(\|\s*(?:ba|z)?sh\b)",
        R"(/bin/(?:ba|z)?sh\s+-c)",
    };
    return c;
}

CodeConfig CodeConfig::from_json(const nlohmann::json& doc, const CodeConfig& base) {
    CodeConfig out = doc.value("replace", false) ? CodeConfig{} : base;
    try {
        if (doc.contains("sinks")) {
            const auto& sinks = doc.at("sinks");
            for (const auto& [key, value] : sinks.items()) {
                if (std::find(std::begin(kSinkKeys), std::end(kSinkKeys), key) == std::end(kSinkKeys)) {
                    throw InputError("unknown sink category '" + key + "'");
                }
            }
            for (const char* key : kSinkKeys) {
                if (!sinks.contains(key)) continue;
                const auto category = nlohmann::json(key).get<SinkCategory>();
                for (const auto& c : sinks.at(key)) out.sinks.add({c.get<std::string>(), category});
            }
        }
        for (const auto& p : doc.value("placeholders", std::vector<std::string>{})) {
            if (std::find(out.placeholder_patterns.begin(), out.placeholder_patterns.end(), p) ==
                out.placeholder_patterns.end()) {
                out.placeholder_patterns.push_back(p);
            }
        }
        for (const auto& p : doc.value("fetch_execute_signatures", std::vector<std::string>{})) {
            if (std::find(out.fetch_execute_signatures.begin(), out.fetch_execute_signatures.end(), p) ==
                out.fetch_execute_signatures.end()) {
                out.fetch_execute_signatures.push_back(p);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed sink/placeholder config: ") + e.what());
    }
    return out;
}

CodeConfig CodeConfig::load(const std::filesystem::path& path, const CodeConfig& base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read sink config " + path.string());
    try {
        return from_json(nlohmann::json::parse(in), base);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed sink config " + path.string() + ": " + e.what());
    }
}

nlohmann::json CodeConfig::to_json() const {
    return {{"sinks", sinks.to_json()},
            {"placeholders", placeholder_patterns},
            {"fetch_execute_signatures", fetch_execute_signatures}};
}

std::string CodeConfig::digest() const { return text::hex64(text::fnv1a64(to_json().dump())); }

void sort_by_severity(std::vector<SinkFinding>& findings) {
    std::stable_sort(findings.begin(), findings.end(), [](const SinkFinding& a, const SinkFinding& b) {
        if (a.sink != b.sink) return severity_rank(a.sink) < severity_rank(b.sink);
        if (a.file != b.file) return a.file < b.file;
        if (a.match.span != b.match.span) return a.match.span < b.match.span;
        return a.call_span < b.call_span;
    });
}

}  // namespace skillscan
