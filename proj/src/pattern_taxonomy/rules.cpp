#include <algorithm>
#include <map>
#include <set>

#include <boost/regex.hpp>

#include "skillscan/pattern_taxonomy.hpp"
#include "skillscan/text.hpp"
#include "../regex_util.hpp"

namespace skillscan {

namespace {

const boost::regex::flag_type kFlags = boost::regex::perl | boost::regex::icase;

std::vector<boost::regex> compile_all(const std::vector<std::string>& patterns, const std::string& what) {
    std::vector<boost::regex> out;
    for (const auto& p : patterns) {
        try {
            out.emplace_back(p, kFlags);
        } catch (const boost::regex_error& e) {
            throw ArgumentError(what + " pattern does not compile: '" + p + "': " + e.what());
        }
    }
    return out;
}

bool contains_icase(std::string_view hay, std::string_view needle) {
    return text::to_lower(hay).find(text::to_lower(needle)) != std::string::npos;
}

std::string_view slice(std::string_view t, Span s) { return t.substr(s.start, s.size()); }

// Adjacent or overlapping spans collapse into one.
std::vector<Span> merge_spans(std::vector<Span> spans) {
    std::sort(spans.begin(), spans.end());
    std::vector<Span> out;
    for (const auto& s : spans) {
        if (!out.empty() && s.start <= out.back().end) {
            out.back().end = std::max(out.back().end, s.end);
        } else {
            out.push_back(s);
        }
    }
    return out;
}

Span trim(std::string_view t, Span s) {
    while (s.start < s.end && text::is_space(t[s.start])) ++s.start;
    while (s.end > s.start && text::is_space(t[s.end - 1])) --s.end;
    return s;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

bool is_env_name(std::string_view v) {
    if (v.empty() || !(v[0] >= 'A' && v[0] <= 'Z')) return false;
    return std::all_of(v.begin(), v.end(), [](char c) { return (c >= 'A' && c <= 'Z') || text::is_ascii_digit(c) || c == '_'; });
}

// High-entropy-ish value: long enough, one token, and either contains a digit or is long
// with mixed case. Paths, env-var names, templates and plain URLs are excluded.
bool secret_like(std::string_view v) {
    if (v.size() < 8) return false;
    bool digit = false, upper = false, lower = false;
    for (char c : v) {
        if (text::is_space(c)) return false;
        digit |= text::is_ascii_digit(c);
        upper |= (c >= 'A' && c <= 'Z');
        lower |= (c >= 'a' && c <= 'z');
    }
    for (std::string_view p : {"/", "./", "../", "~/", "$", "%", "<", "{"}) {
        if (starts_with(v, p)) return false;
    }
    if (v.find('\\') != std::string_view::npos || v.find("${") != std::string_view::npos ||
        v.find("{{") != std::string_view::npos) {
        return false;
    }
    if (v.find("://") != std::string_view::npos && v.find('@') == std::string_view::npos) return false;
    if (is_env_name(v)) return false;
    return digit || (v.size() >= 20 && upper && lower);
}

// Literal contents without string prefix and quotes.
Span literal_body(std::string_view t, Span lit) {
    std::size_t s = lit.start;
    while (s < lit.end && text::is_ascii_letter(t[s])) ++s;
    std::size_t e = lit.end;
    for (std::string_view q : {"\"\"\"", "'''", "\"", "'", "`"}) {
        if (e - s >= 2 * q.size() && t.substr(s, q.size()) == q && t.substr(e - q.size(), q.size()) == q) {
            return {s + q.size(), e - q.size()};
        }
    }
    return {s, e};
}

bool interpolated(std::string_view t, Span lit) {
    const auto whole = slice(t, lit);
    if (whole.find("${") != std::string_view::npos) return true;
    std::size_t s = lit.start;
    bool f_prefix = false;
    for (; s < lit.end && text::is_ascii_letter(t[s]); ++s) f_prefix |= (t[s] == 'f' || t[s] == 'F');
    return f_prefix && whole.find('{') != std::string_view::npos;
}

bool name_char(char c) { return text::is_ident_char(c) || c == '.' || c == '-'; }

// Name bound to a literal on the same line: `NAME = "..."`, `name: "..."`, `"key": "..."`,
// `name: str = "..."`.
std::optional<Span> assignment_name(std::string_view t, Span line, std::size_t lit_start) {
    std::size_t p = lit_start;
    while (p > line.start && text::is_space(t[p - 1])) --p;
    if (p == line.start) return std::nullopt;
    const char op = t[p - 1];
    if (op == '=') {
        if (p - 1 > line.start && std::string_view("=!<>").find(t[p - 2]) != std::string_view::npos) return std::nullopt;
        --p;
        if (p > line.start && t[p - 1] == ':') --p;
    } else if (op == ':') {
        --p;
    } else {
        return std::nullopt;
    }
    auto read_token = [&](std::size_t end) -> std::optional<Span> {
        while (end > line.start && text::is_space(t[end - 1])) --end;
        if (end > line.start && (t[end - 1] == '"' || t[end - 1] == '\'')) --end;
        std::size_t start = end;
        while (start > line.start && name_char(t[start - 1])) --start;
        if (start == end) return std::nullopt;
        return Span{start, end};
    };
    auto tok = read_token(p);
    if (!tok) return std::nullopt;
    // Annotated assignment: step over the type.
    std::size_t q = tok->start;
    while (q > line.start && text::is_space(t[q - 1])) --q;
    if (op == '=' && q > line.start && t[q - 1] == ':') {
        if (auto name = read_token(q - 1)) return name;
    }
    return tok;
}

std::string event_host(const TraceEvent& ev) {
    const auto& m = ev.metadata;
    if (m.contains("host") && m.at("host").is_string()) return text::to_lower(m.at("host").get<std::string>());
    if (m.contains("url") && m.at("url").is_string()) {
        if (auto h = text::url_host(m.at("url").get<std::string>())) return *h;
    }
    if (m.contains("destination") && m.at("destination").is_string()) {
        auto d = m.at("destination").get<std::string>();
        if (auto colon = d.rfind(':'); colon != std::string::npos && d.find(':') == colon) d = d.substr(0, colon);
        return text::to_lower(d);
    }
    return "unknown";
}

bool config_file(std::string_view path) {
    const auto slash = path.rfind('/');
    const std::string base = text::to_lower(slash == std::string_view::npos ? path : path.substr(slash + 1));
    if (starts_with(base, ".env")) return true;
    for (std::string_view ext : {".env", ".json", ".yaml", ".yml", ".toml", ".ini", ".cfg", ".conf", ".properties"}) {
        if (base.size() > ext.size() && base.substr(base.size() - ext.size()) == ext) return true;
    }
    return false;
}

bool scriptable(const FileAnalysis& fa) { return fa.view.language != Language::Other; }

}  // namespace

bool host_declared(std::string_view host, const std::vector<NLDocument>& docs) {
    const std::string h = text::to_lower(host);
    if (h.empty() || h == "unknown") return false;
    std::string label;
    if (!text::is_ipv4_literal(h)) {
        std::vector<std::string> labels;
        std::size_t start = 0;
        while (start <= h.size()) {
            const auto dot = h.find('.', start);
            labels.push_back(h.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        if (labels.size() >= 2 && labels[labels.size() - 2].size() >= 4) label = labels[labels.size() - 2];
    }
    for (const auto& d : docs) {
        const std::string lower = text::to_lower(d.text);
        if (lower.find(h) != std::string::npos) return true;
        if (label.empty()) continue;
        for (auto pos = lower.find(label); pos != std::string::npos; pos = lower.find(label, pos + 1)) {
            if (text::letter_bounded(lower, {pos, pos + label.size()})) return true;
        }
    }
    return false;
}

struct PatternEngine::Impl {
    SignatureConfig config;
    std::map<std::string, std::vector<boost::regex>> signatures;
    std::vector<boost::regex> artifact_paths;
    std::vector<boost::regex> placeholders;
    SinkTable process_sinks;
    SinkTable response_sinks;
    boost::regex url{R"(https?://[^\s"'`<>()\[\]{},]+)", kFlags};
    boost::regex userinfo{R"(://[^:/@\s]+:([^@/\s]+)@)", kFlags};
    boost::regex config_line{R"(^[ \t]*(?:export[ \t]+)?["']?([A-Za-z_][\w.\-]*)["']?[ \t]*[:=][ \t]*["']?([^\s"',#]+))",
                             boost::regex::perl};
    boost::regex env_keyword{R"(\benv\s*[=:])", boost::regex::perl};
    boost::regex key_body{R"([A-Za-z0-9+/=\r\n]{40,})", boost::regex::perl};

    std::vector<Span> scan(const std::string& family, std::string_view t) const {
        std::vector<Span> out;
        auto it = signatures.find(family);
        if (it == signatures.end()) return out;
        for (const auto& re : it->second) detail::for_each_match(t, re, [&](Span s) { out.push_back(s); });
        return merge_spans(std::move(out));
    }

    std::vector<Span> scan_families(std::initializer_list<const char*> families, std::string_view t) const {
        std::vector<Span> all;
        for (const char* f : families) {
            auto s = scan(f, t);
            all.insert(all.end(), s.begin(), s.end());
        }
        return merge_spans(std::move(all));
    }

    bool placeholder(std::string_view v) const {
        return std::any_of(placeholders.begin(), placeholders.end(),
                           [&](const boost::regex& re) { return detail::search(v, re); });
    }

    bool exfil_host(std::string_view host) const {
        for (const auto& h : config.exfil_hosts) {
            if (host == h || (host.size() > h.size() && host.substr(host.size() - h.size()) == h &&
                              host[host.size() - h.size() - 1] == '.')) {
                return true;
            }
        }
        return false;
    }

    // Exfiltration services must be named outright; other hosts may be declared by label.
    bool declared(const std::string& host, const SkillEvidence& ev) const {
        if (exfil_host(host)) {
            return std::any_of(ev.nl_documents.begin(), ev.nl_documents.end(),
                               [&](const NLDocument& d) { return text::to_lower(d.text).find(host) != std::string::npos; });
        }
        return host_declared(host, ev.nl_documents);
    }

    std::vector<std::string> hosts_in(std::string_view t) const {
        std::set<std::string> out;
        detail::for_each_match(t, url, [&](Span s) {
            if (auto h = text::url_host(slice(t, s))) out.insert(*h);
        });
        return {out.begin(), out.end()};
    }

    // True when some host is named and every named host is declared.
    bool all_declared(std::string_view t, const SkillEvidence& ev) const {
        const auto hosts = hosts_in(t);
        if (hosts.empty()) return false;
        return std::all_of(hosts.begin(), hosts.end(), [&](const std::string& h) { return declared(h, ev); });
    }
};

namespace {

class Collector {
  public:
    explicit Collector(std::string skill_id) : skill_id_(std::move(skill_id)) {}

    void add(const std::string& rule_id, const std::string& file, Span span, std::vector<EvidenceItem> evidence,
             std::optional<int> severity = std::nullopt) {
        IssueRecord r;
        r.skill_id = skill_id_;
        r.pattern = rule_by_id(rule_id).pattern;
        r.rule = rule_id;
        r.file = file;
        r.span = span;
        r.evidence = std::move(evidence);
        r.severity = severity;
        const auto ch = classify_channel(r.evidence);
        r.channel = ch.primary;
        r.secondary_channels = ch.secondary;
        issues_.push_back(std::move(r));
    }

    std::vector<IssueRecord> take() { return merge_issues(issues_, {}); }

  private:
    std::string skill_id_;
    std::vector<IssueRecord> issues_;
};

EvidenceItem signature_item(const std::string& file, Span span, std::string detail, LeakChannel channel) {
    EvidenceItem e;
    e.kind = EvidenceKind::Signature;
    e.stream = Stream::Code;
    e.channel = channel;
    e.file = file;
    e.span = span;
    e.detail = std::move(detail);
    return e;
}

EvidenceItem sink_item(const SinkFinding& f, LeakChannel channel) {
    EvidenceItem e;
    e.kind = EvidenceKind::SinkFinding;
    e.stream = Stream::Code;
    e.channel = channel;
    e.file = f.file;
    e.span = f.match.span;
    e.detail = f.callee;
    e.sink = f.sink;
    return e;
}

// Sink findings sharing a call collapse into one group.
std::map<Span, std::vector<const SinkFinding*>> group_by_call(const FileAnalysis& fa, SinkCategory category) {
    std::map<Span, std::vector<const SinkFinding*>> out;
    for (const auto& f : fa.sink_findings) {
        if (f.sink == category) out[f.call_span].push_back(&f);
    }
    return out;
}

}  // namespace

PatternEngine::PatternEngine(SignatureConfig config, std::vector<std::string> placeholder_patterns) {
    auto impl = std::make_shared<Impl>();
    for (const auto& [family, patterns] : config.signatures) {
        const auto& known = SignatureConfig::families();
        if (std::find(known.begin(), known.end(), family) == known.end()) {
            throw ArgumentError("unknown signature family '" + family + "'");
        }
        impl->signatures[family] = compile_all(patterns, "signature (" + family + ")");
    }
    impl->artifact_paths = compile_all(config.artifact_paths, "artifact path");
    impl->placeholders = compile_all(placeholder_patterns, "placeholder");
    for (const auto& c : config.process_sinks) impl->process_sinks.add({c, SinkCategory::FileIO});
    for (const auto& c : config.response_sinks) impl->response_sinks.add({c, SinkCategory::FileIO});
    if (config.beacon_min_events < 1) throw ArgumentError("beacon_min_events must be at least 1");
    impl->config = std::move(config);
    impl_ = std::move(impl);
}

const SignatureConfig& PatternEngine::config() const { return impl_->config; }

std::vector<IssueRecord> PatternEngine::assign(const SkillEvidence& ev) const {
    const Impl& im = *impl_;
    Collector out(ev.skill_id);

    for (const auto& fa : ev.files) {
        const std::string& file = fa.view.file;
        const std::string_view orig = fa.view.original;
        const std::string_view exec = fa.view.masked_text;

        // Hardcoded literals in source.
        if (scriptable(fa)) {
            for (const auto& lit : fa.view.string_literals) {
                if (fa.view.intersects_mask(lit) || interpolated(orig, lit)) continue;
                const Span body = literal_body(orig, lit);
                const auto value = slice(orig, body);
                if (im.placeholder(value)) continue;
                const bool sunk = std::any_of(fa.sink_findings.begin(), fa.sink_findings.end(),
                                              [&](const SinkFinding& f) { return lit.contains(f.match.span); });
                if (sunk) continue;

                bool named = false;
                if (auto name = assignment_name(orig, text::line_span(orig, lit.start), lit.start)) {
                    named = std::any_of(fa.matches.begin(), fa.matches.end(), [&](const CredentialMatch& m) {
                        return name->contains(m.span) && m.kind != MatchKind::EnvAccessor;
                    });
                }
                bool shaped = false;
                bool private_key = false;
                for (const auto& m : fa.matches) {
                    if (!body.contains(m.span)) continue;
                    if (m.kind == MatchKind::ProviderPrefix) shaped = true;
                    if (m.kind == MatchKind::CryptoMarker && contains_icase(m.matched_text, "PRIVATE KEY")) {
                        private_key = detail::search(value, im.key_body);
                    }
                }
                bool conn_password = false;
                boost::cmatch um;
                if (boost::regex_search(value.data(), value.data() + value.size(), um, im.userinfo)) {
                    const std::string pw = um[1].str();
                    conn_password = pw.size() >= 6 && !im.placeholder(pw) && pw.front() != '$' && pw.front() != '{' &&
                                    pw.front() != '<';
                }
                const bool leak = private_key || conn_password || ((named || shaped) && secret_like(value));
                if (!leak) continue;
                EvidenceItem e;
                e.kind = EvidenceKind::HardcodedLiteral;
                e.stream = Stream::Code;
                e.channel = LeakChannel::File;
                e.file = file;
                e.span = lit;
                e.detail = named ? "credential-named binding" : (shaped ? "provider-shaped value" : "embedded secret");
                out.add("hardcoded-source-literal", file, lit, {e});
            }
        }

        // Bundled config files.
        if (fa.view.language == Language::Other && config_file(file)) {
            boost::cregex_iterator it(orig.data(), orig.data() + orig.size(), im.config_line);
            for (; it != boost::cregex_iterator(); ++it) {
                const auto& m = *it;
                const Span name{static_cast<std::size_t>(m[1].first - orig.data()),
                                static_cast<std::size_t>(m[1].second - orig.data())};
                const Span value{static_cast<std::size_t>(m[2].first - orig.data()),
                                 static_cast<std::size_t>(m[2].second - orig.data())};
                const auto v = slice(orig, value);
                if (!secret_like(v) || im.placeholder(v)) continue;
                const bool hit = std::any_of(fa.matches.begin(), fa.matches.end(), [&](const CredentialMatch& cm) {
                    return (name.contains(cm.span) && cm.kind != MatchKind::EnvAccessor) ||
                           (value.contains(cm.span) && cm.kind == MatchKind::ProviderPrefix);
                });
                if (!hit) continue;
                EvidenceItem e;
                e.kind = EvidenceKind::HardcodedLiteral;
                e.channel = LeakChannel::File;
                e.file = file;
                e.span = value;
                e.detail = std::string(slice(orig, name));
                out.add("hardcoded-config", file, value, {e});
            }
        }

        if (!scriptable(fa)) continue;

        // Credentials in process arguments.
        for (const auto& c : fa.call_sites) {
            if (!im.process_sinks.lookup(c.callee)) continue;
            const auto before = slice(orig, {c.arguments_span.start, c.match.span.start});
            if (detail::search(before, im.env_keyword)) continue;
            EvidenceItem e;
            e.kind = EvidenceKind::CallArgument;
            e.channel = LeakChannel::File;
            e.file = file;
            e.span = c.match.span;
            e.detail = c.callee;
            out.add("insecure-process-argument", file, c.call_span, {e});
        }
        if (fa.view.language == Language::Shell) {
            for (const auto& s : im.scan("cli_credential_flag", exec)) {
                out.add("insecure-process-argument", file, s,
                        {signature_item(file, s, "cli_credential_flag", LeakChannel::File)});
            }
        }
        for (const auto& s : im.scan("url_credential_param", exec)) {
            out.add("insecure-url-parameter", file, s, {signature_item(file, s, "url_credential_param", LeakChannel::File)});
        }

        // Logging sinks and response bodies.
        for (const auto& [call, group] : group_by_call(fa, SinkCategory::Logging)) {
            std::vector<EvidenceItem> items;
            for (const auto* f : group) items.push_back(sink_item(*f, LeakChannel::Stdout));
            out.add("info-exposure-logging", file, call, items, severity_rank(SinkCategory::Logging));
        }
        {
            std::map<Span, std::vector<EvidenceItem>> responses;
            for (const auto& c : fa.call_sites) {
                if (!im.response_sinks.lookup(c.callee)) continue;
                EvidenceItem e;
                e.kind = EvidenceKind::CallArgument;
                e.channel = LeakChannel::Stdout;
                e.file = file;
                e.span = c.match.span;
                e.detail = c.callee;
                responses[c.call_span].push_back(e);
            }
            for (auto& [call, items] : responses) out.add("info-exposure-response", file, call, items);
        }

        // Artifact writes.
        for (const auto& [call, group] : group_by_call(fa, SinkCategory::FileIO)) {
            // The path is often opened a few lines above the write.
            std::size_t from = text::line_span(orig, call.start).start;
            for (int back = 0; back < 3 && from > 0; ++back) from = text::line_span(orig, from - 1).start;
            const auto context = slice(exec, {from, call.end});
            const bool artifact = std::any_of(im.artifact_paths.begin(), im.artifact_paths.end(),
                                              [&](const boost::regex& re) { return detail::search(context, re); });
            if (!artifact) continue;
            std::vector<EvidenceItem> items;
            for (const auto* f : group) items.push_back(sink_item(*f, LeakChannel::File));
            out.add("artifact-leakage", file, call, items, severity_rank(SinkCategory::FileIO));
        }
        if (fa.view.language == Language::Shell) {
            std::set<Span> lines;
            for (const auto& m : fa.matches) lines.insert(trim(orig, text::line_span(orig, m.span.start)));
            for (const auto& line : lines) {
                if (im.scan("artifact_write", slice(exec, line)).empty()) continue;
                out.add("artifact-leakage", file, line, {signature_item(file, line, "artifact_write", LeakChannel::File)});
            }
        }

        // Malicious signatures.
        auto each = [&](std::initializer_list<const char*> families, const std::string& rule, LeakChannel ch) {
            for (const auto& s : im.scan_families(families, exec)) {
                out.add(rule, file, s, {signature_item(file, s, std::string(*families.begin()), ch)});
            }
        };
        each({"fetch_execute", "reverse_shell", "download_execute", "decode_execute"}, "remote-exploitation",
             LeakChannel::Network);
        each({"credential_store", "env_dump"}, "credential-compromise-env-theft", LeakChannel::File);
        each({"ssh_key_read"}, "credential-compromise-ssh", LeakChannel::File);
        each({"keylogger"}, "data-exfiltration-keylogger", LeakChannel::File);
        each({"authorized_keys_write"}, "persistence-authorized-keys", LeakChannel::File);
        each({"cron_beacon"}, "persistence-c2", LeakChannel::Network);
        each({"miner"}, "resource-hijacking", LeakChannel::Network);

        const bool harvests =
            !im.scan_families({"credential_store", "env_dump", "ssh_key_read", "browser_storage"}, exec).empty();

        if (fa.view.markup_container) {
            const auto storage = im.scan("browser_storage", exec);
            const auto network = im.scan("network_call", exec);
            if (!storage.empty() && !network.empty() && !im.all_declared(exec, ev)) {
                std::vector<EvidenceItem> items;
                for (const auto& s : storage) items.push_back(signature_item(file, s, "browser_storage", LeakChannel::Network));
                for (const auto& s : network) items.push_back(signature_item(file, s, "network_call", LeakChannel::Network));
                const Span span{std::min(storage.front().start, network.front().start),
                                std::max(storage.back().end, network.back().end)};
                out.add("data-exfiltration-xss", file, span, items);
            }
        } else {
            if (harvests) {
                for (const auto& [call, group] : group_by_call(fa, SinkCategory::Network)) {
                    if (im.all_declared(slice(orig, call), ev)) continue;
                    std::vector<EvidenceItem> items;
                    for (const auto* f : group) items.push_back(sink_item(*f, LeakChannel::Network));
                    out.add("data-exfiltration-webhook", file, call, items, severity_rank(SinkCategory::Network));
                }
            }
            detail::for_each_match(exec, im.url, [&](Span s) {
                auto host = text::url_host(slice(exec, s));
                if (!host || !im.exfil_host(*host) || im.declared(*host, ev)) return;
                out.add("data-exfiltration-webhook", file, s, {signature_item(file, s, "exfil_host", LeakChannel::Network)});
            });
            for (const auto& s : im.scan("pipe_to_network", exec)) {
                const Span line = trim(orig, text::line_span(orig, s.start));
                const auto line_text = slice(exec, line);
                const bool credential_data =
                    !im.scan_families({"credential_store", "env_dump", "ssh_key_read"}, line_text).empty() ||
                    std::any_of(fa.matches.begin(), fa.matches.end(),
                                [&](const CredentialMatch& m) { return line.contains(m.span); });
                if (!credential_data || im.all_declared(line_text, ev)) continue;
                out.add("data-exfiltration-webhook", file, line,
                        {signature_item(file, s, "pipe_to_network", LeakChannel::Network)});
            }
        }

        // Encoded payloads.
        for (const auto& f : fa.obfuscation_findings) {
            if (!f.has_evidence()) continue;
            EvidenceItem e;
            e.kind = EvidenceKind::ObfuscationFinding;
            e.channel = LeakChannel::File;
            e.file = file;
            e.span = f.span;
            e.detail = f.encoding;
            out.add("defense-evasion", file, f.span, {e});
            auto decoded = [&](std::initializer_list<const char*> families, const std::string& rule, LeakChannel ch) {
                if (im.scan_families(families, f.decoded_text).empty()) return;
                out.add(rule, file, f.span,
                        {signature_item(file, f.span, f.encoding + ":" + std::string(*families.begin()), ch)});
            };
            decoded({"fetch_execute", "reverse_shell", "download_execute", "decode_execute"}, "remote-exploitation",
                    LeakChannel::Network);
            decoded({"credential_store", "env_dump"}, "credential-compromise-env-theft", LeakChannel::File);
            decoded({"ssh_key_read"}, "credential-compromise-ssh", LeakChannel::File);
            decoded({"authorized_keys_write"}, "persistence-authorized-keys", LeakChannel::File);
            decoded({"miner"}, "resource-hijacking", LeakChannel::Network);
        }
    }

    // NL documents.
    for (const auto& m : ev.nl_matches) {
        const auto doc = std::find_if(ev.nl_documents.begin(), ev.nl_documents.end(),
                                      [&](const NLDocument& d) { return d.relative_path == m.file; });
        if (doc == ev.nl_documents.end()) continue;
        const std::string_view t = doc->text;
        Span tok = m.span;
        auto token_char = [](char c) { return !text::is_space(c) && std::string_view("\"'`<>()[]").find(c) == std::string_view::npos; };
        while (tok.start > 0 && token_char(t[tok.start - 1])) --tok.start;
        while (tok.end < t.size() && token_char(t[tok.end])) ++tok.end;
        const auto token = slice(t, tok);
        bool leak = false;
        if (m.kind == MatchKind::ProviderPrefix) {
            leak = token.size() >= 20 && secret_like(token) && !im.placeholder(token);
        } else if (m.kind == MatchKind::CryptoMarker && contains_icase(m.matched_text, "PRIVATE KEY")) {
            leak = detail::search(t.substr(m.span.end, std::min<std::size_t>(400, t.size() - m.span.end)), im.key_body);
        } else if (m.kind == MatchKind::ConnectionScheme) {
            boost::cmatch um;
            if (boost::regex_search(token.data(), token.data() + token.size(), um, im.userinfo)) {
                const std::string pw = um[1].str();
                leak = secret_like(pw) && !im.placeholder(pw);
            }
        }
        if (!leak) continue;
        EvidenceItem e;
        e.kind = EvidenceKind::HardcodedLiteral;
        e.stream = Stream::NL;
        e.channel = LeakChannel::File;
        e.file = m.file;
        e.span = tok;
        e.detail = std::string(to_string(m.kind));
        out.add("hardcoded-documentation", m.file, tok, {e});
    }
    for (const auto& f : ev.nl_findings) {
        std::string detail;
        for (auto c : f.triggered_constraints) {
            if (c == Constraint::CredentialActionCooccurrence) continue;
            detail += (detail.empty() ? "" : ",") + nlohmann::json(c).get<std::string>();
        }
        if (detail.empty()) continue;
        EvidenceItem e;
        e.kind = EvidenceKind::NLFinding;
        e.stream = Stream::NL;
        e.channel = LeakChannel::Stdout;
        e.file = f.window.doc_path;
        e.span = f.window.span;
        e.detail = detail;
        out.add("credential-compromise-social", f.window.doc_path, f.window.span, {e});
    }

    // Runtime evidence.
    if (ev.trace) {
        const auto& events = ev.trace->events;
        for (const auto& [key, hits] : ev.hits) {
            for (const auto& h : hits) {
                if (h.event_index >= events.size()) {
                    throw ConsistencyError("marker hit refers to event " + std::to_string(h.event_index) +
                                           " of a " + std::to_string(events.size()) + "-event trace");
                }
                const auto& event = events[h.event_index];
                EvidenceItem e;
                e.kind = EvidenceKind::TraceEvent;
                e.stream = Stream::Code;
                e.event_index = h.event_index;
                e.detail = h.marker + (h.via_base64 ? " (base64)" : "");
                switch (event.channel) {
                    case TraceChannel::Stdout:
                    case TraceChannel::Stderr: {
                        e.channel = LeakChannel::Stdout;
                        e.file = event.channel == TraceChannel::Stdout ? "trace:stdout" : "trace:stderr";
                        out.add("info-exposure-logging", e.file, {}, {e});
                        break;
                    }
                    case TraceChannel::FileWrite: {
                        const std::string path = event.metadata.value("path", std::string("unknown"));
                        const bool mentioned = std::any_of(ev.nl_documents.begin(), ev.nl_documents.end(),
                                                           [&](const NLDocument& d) { return d.text.find(path) != std::string::npos; });
                        if (mentioned && path != "unknown") break;
                        e.channel = LeakChannel::File;
                        e.file = "trace:" + path;
                        out.add("artifact-leakage", e.file, {}, {e});
                        break;
                    }
                    case TraceChannel::NetworkEgress: {
                        const std::string host = event_host(event);
                        if (im.declared(host, ev)) break;
                        e.channel = LeakChannel::Network;
                        e.file = "trace:" + host;
                        out.add("data-exfiltration-webhook", e.file, {}, {e});
                        break;
                    }
                }
            }
        }
        std::map<std::string, std::vector<std::size_t>> by_ip;
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (events[i].channel != TraceChannel::NetworkEgress) continue;
            const std::string host = event_host(events[i]);
            if (text::is_ipv4_literal(host) && !im.declared(host, ev)) by_ip[host].push_back(i);
        }
        for (const auto& [ip, idx] : by_ip) {
            if (static_cast<int>(idx.size()) < im.config.beacon_min_events) continue;
            std::vector<EvidenceItem> items;
            for (auto i : idx) {
                EvidenceItem e;
                e.kind = EvidenceKind::TraceEvent;
                e.channel = LeakChannel::Network;
                e.file = "trace:" + ip;
                e.event_index = i;
                e.detail = "egress";
                items.push_back(e);
            }
            out.add("persistence-c2", "trace:" + ip, {}, items);
        }
    }
    return out.take();
}

std::vector<IssueRecord> assign_patterns(const SkillEvidence& evidence, const PatternEngine& engine) {
    return engine.assign(evidence);
}

}  // namespace skillscan
