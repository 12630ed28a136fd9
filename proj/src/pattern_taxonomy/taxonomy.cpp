#include <algorithm>
#include <fstream>
#include <set>

#include <boost/regex.hpp>

#include "skillscan/pattern_taxonomy.hpp"
#include "skillscan/text.hpp"

namespace skillscan {

PatternFamily family_of(LeakagePattern pattern) {
    switch (pattern) {
        case LeakagePattern::HardcodedCredentials:
        case LeakagePattern::InsecureStorage:
        case LeakagePattern::InformationExposure:
        case LeakagePattern::ArtifactLeakage: return PatternFamily::Vulnerability;
        default: return PatternFamily::Malicious;
    }
}

std::string_view to_string(LeakagePattern pattern) {
    switch (pattern) {
        case LeakagePattern::HardcodedCredentials: return "hardcoded_credentials";
        case LeakagePattern::InsecureStorage: return "insecure_storage";
        case LeakagePattern::InformationExposure: return "information_exposure";
        case LeakagePattern::ArtifactLeakage: return "artifact_leakage";
        case LeakagePattern::RemoteExploitation: return "remote_exploitation";
        case LeakagePattern::CredentialCompromise: return "credential_compromise";
        case LeakagePattern::DataExfiltration: return "data_exfiltration";
        case LeakagePattern::DefenseEvasion: return "defense_evasion";
        case LeakagePattern::Persistence: return "persistence";
        case LeakagePattern::ResourceHijacking: return "resource_hijacking";
    }
    return "unknown";
}

std::string_view to_string(PatternFamily family) {
    return family == PatternFamily::Vulnerability ? "vulnerability" : "malicious";
}

std::string_view to_string(LeakChannel channel) {
    switch (channel) {
        case LeakChannel::Stdout: return "stdout";
        case LeakChannel::File: return "file";
        case LeakChannel::Network: return "network";
    }
    return "unknown";
}

int channel_priority(LeakChannel channel) {
    switch (channel) {
        case LeakChannel::Network: return 3;
        case LeakChannel::Stdout: return 2;
        case LeakChannel::File: return 1;
    }
    return 0;
}

std::string_view to_string(AttackSurface surface) {
    switch (surface) {
        case AttackSurface::CodeAndNL: return "code_and_nl";
        case AttackSurface::CodeOnly: return "code_only";
        case AttackSurface::NLOnly: return "nl_only";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const EvidenceItem& e) {
    j = {{"kind", e.kind},   {"stream", e.stream}, {"channel", e.channel},
         {"file", e.file},   {"span", e.span},     {"detail", e.detail}};
    if (e.sink) j["sink"] = *e.sink;
    if (e.event_index) j["event_index"] = *e.event_index;
}

void from_json(const nlohmann::json& j, EvidenceItem& e) {
    e.kind = j.at("kind").get<EvidenceKind>();
    e.stream = j.at("stream").get<Stream>();
    e.channel = j.at("channel").get<LeakChannel>();
    e.file = j.at("file").get<std::string>();
    e.span = j.at("span").get<Span>();
    e.detail = j.value("detail", std::string());
    e.sink = j.contains("sink") ? std::optional<SinkCategory>(j.at("sink").get<SinkCategory>()) : std::nullopt;
    e.event_index =
        j.contains("event_index") ? std::optional<std::size_t>(j.at("event_index").get<std::size_t>()) : std::nullopt;
}

void to_json(nlohmann::json& j, const IssueRecord& r) {
    j = {{"skill_id", r.skill_id},
         {"pattern", r.pattern},
         {"family", family_of(r.pattern)},
         {"rule", r.rule},
         {"channel", r.channel},
         {"secondary_channels", r.secondary_channels},
         {"file", r.file},
         {"span", r.span},
         {"evidence", r.evidence}};
    if (r.severity) j["severity"] = *r.severity;
    if (r.lifecycle_phase) j["lifecycle_phase"] = *r.lifecycle_phase;
    if (r.region) j["region"] = *r.region;
}

void from_json(const nlohmann::json& j, IssueRecord& r) {
    r.skill_id = j.at("skill_id").get<std::string>();
    r.pattern = j.at("pattern").get<LeakagePattern>();
    r.rule = j.at("rule").get<std::string>();
    r.channel = j.at("channel").get<LeakChannel>();
    r.secondary_channels = j.value("secondary_channels", std::vector<LeakChannel>{});
    r.file = j.at("file").get<std::string>();
    r.span = j.at("span").get<Span>();
    r.evidence = j.value("evidence", std::vector<EvidenceItem>{});
    r.severity = j.contains("severity") ? std::optional<int>(j.at("severity").get<int>()) : std::nullopt;
    r.lifecycle_phase = j.contains("lifecycle_phase")
                            ? std::optional<LifecyclePhase>(j.at("lifecycle_phase").get<LifecyclePhase>())
                            : std::nullopt;
    r.region = j.contains("region") ? std::optional<SourceRegion>(j.at("region").get<SourceRegion>()) : std::nullopt;
}

SourceRegion region_of(std::string_view text, Span span) {
    const std::size_t last = span.end > span.start ? span.end - 1 : span.start;
    return {text::line_of(text, span.start), text::column_of(text, span.start), text::line_of(text, last),
            text::column_of(text, last) + (span.end > span.start ? 1 : 0)};
}

bool issue_less(const IssueRecord& a, const IssueRecord& b) {
    if (a.skill_id != b.skill_id) return a.skill_id < b.skill_id;
    if (a.file != b.file) return a.file < b.file;
    if (a.span != b.span) return a.span < b.span;
    if (a.pattern != b.pattern) return a.pattern < b.pattern;
    return a.rule < b.rule;
}

ChannelAssignment classify_channel(const std::vector<EvidenceItem>& evidence) {
    if (evidence.empty()) throw ArgumentError("classify_channel needs at least one evidence item");
    std::set<LeakChannel> present;
    for (const auto& e : evidence) present.insert(e.channel);
    std::vector<LeakChannel> ordered(present.begin(), present.end());
    std::sort(ordered.begin(), ordered.end(),
              [](LeakChannel a, LeakChannel b) { return channel_priority(a) > channel_priority(b); });
    ChannelAssignment out;
    out.primary = ordered.front();
    out.secondary.assign(ordered.begin() + 1, ordered.end());
    return out;
}

const std::vector<PatternRule>& rule_table() {
    using P = LeakagePattern;
    static const std::vector<PatternRule> kRules = {
        {"hardcoded-source-literal", P::HardcodedCredentials, {"Source code"},
         "credential-named or provider-shaped literal in source with no sink"},
        {"hardcoded-documentation", P::HardcodedCredentials, {"documentation"},
         "live-looking key, private key block or password-bearing connection string in NL docs"},
        {"hardcoded-config", P::HardcodedCredentials, {"config files"},
         "credential-named key with a secret-like value in a bundled config file"},
        {"insecure-process-argument", P::InsecureStorage, {"CLI arguments", "process parameters"},
         "credential passed in a subprocess argument list or a command-line flag"},
        {"insecure-url-parameter", P::InsecureStorage, {"URL parameters"},
         "credential carried in a URL query parameter"},
        {"info-exposure-logging", P::InformationExposure, {"Console logs", "debug output"},
         "credential reaches a logging sink, or a marker shows up on stdout/stderr"},
        {"info-exposure-response", P::InformationExposure, {"API responses"},
         "credential returned in an HTTP response body"},
        {"artifact-leakage", P::ArtifactLeakage, {"Shell history", "temp files", "cache", "git config"},
         "credential written to history, temp, cache or git-config paths"},
        {"remote-exploitation", P::RemoteExploitation, {"Remote Code Execution (RCE) backdoors", "reverse shells"},
         "fetch-and-execute, decode-and-execute or reverse-shell signature"},
        {"credential-compromise-social", P::CredentialCompromise, {"Social engineering"},
         "NL social-engineering or prompt-injection window around a credential term"},
        {"credential-compromise-env-theft", P::CredentialCompromise, {"env theft"},
         "reads another tool's credential store or dumps the whole environment"},
        {"credential-compromise-ssh", P::CredentialCompromise, {"SSH key theft"}, "reads a private SSH key"},
        {"data-exfiltration-keylogger", P::DataExfiltration, {"Keyloggers"}, "keystroke capture"},
        {"data-exfiltration-xss", P::DataExfiltration, {"Cross-Site Scripting (XSS)"},
         "markup script reading browser storage and sending it out"},
        {"data-exfiltration-webhook", P::DataExfiltration, {"webhook exfiltration"},
         "harvested credentials or markers sent to an undeclared host"},
        {"defense-evasion", P::DefenseEvasion, {"Base64/encoding obfuscation"},
         "encoded payload hiding credentials or fetch-execute commands"},
        {"persistence-c2", P::Persistence, {"C2 beaconing"},
         "scheduled or repeated egress to an undeclared IP literal"},
        {"persistence-authorized-keys", P::Persistence, {"authorized keys"}, "writes to authorized_keys"},
        {"resource-hijacking", P::ResourceHijacking, {"Crypto miners"}, "crypto-miner binary or pool"},
    };
    return kRules;
}

const PatternRule& rule_by_id(std::string_view id) {
    for (const auto& r : rule_table()) {
        if (r.id == id) return r;
    }
    throw ArgumentError("unknown rule '" + std::string(id) + "'");
}

const std::vector<std::string>& SignatureConfig::families() {
    static const std::vector<std::string> kFamilies = {
        "fetch_execute",   "reverse_shell",    "download_execute",     "decode_execute",
        "ssh_key_read",    "credential_store", "env_dump",             "browser_storage",
        "network_call",    "keylogger",        "pipe_to_network",      "authorized_keys_write",
        "cron_beacon",     "miner",            "artifact_write",       "cli_credential_flag",
        "url_credential_param"};
    return kFamilies;
}

SignatureConfig SignatureConfig::defaults() {
    SignatureConfig c;
    auto& s = c.signatures;
    s["fetch_execute"] = {
        R"(\b(?:curl|wget)\b[^\n|;]*\|\s*(?:sudo\s+)?(?:ba|z|da)?sh\b)",
        R"(\b(?:ba|z)?sh\s+-c\s+["']?\$\(\s*(?:curl|wget)\b)",
        R"(\b(?:exec|eval)\s*\(\s*(?:requests\.get|urllib\.request\.urlopen|urlopen|httpx\.get)\s*\()",
    };
    s["reverse_shell"] = {
        R"(>&\s*/dev/tcp/)",
        R"(\bn(?:c|cat|etcat)\b[^\n]*\s-e\s+/bin/(?:ba|z)?sh\b)",
        R"(\bos\.dup2\(\s*\w+\.fileno\(\))",
    };
    s["download_execute"] = {
        R"(\b(?:curl|wget)\b[^\n]*\bchmod\s+\+x\b)",
    };
    s["decode_execute"] = {
        R"(\bbase64\s+(?:-d|-D|--decode)\b[^\n|]*\|\s*(?:sudo\s+)?(?:ba|z)?sh\b)",
        R"(\b(?:exec|eval)\s*\(\s*(?:base64\.b64decode|atob|Buffer\.from)\s*\()",
    };
    s["ssh_key_read"] = {
        R"((?:~|\$HOME|\$\{HOME\}|/root|/home/[\w.\-]+)/\.ssh/id_(?:rsa|dsa|ecdsa|ed25519)\b(?!\.pub))",
        R"(["']\.ssh["']\s*,\s*["']id_(?:rsa|dsa|ecdsa|ed25519)["'])",
    };
    s["credential_store"] = {
        R"(~/\.[\w\-]+/\.env\b)",
        R"((?:~|\$HOME)/\.aws/credentials\b)",
        R"((?:~|\$HOME)/\.netrc\b)",
        R"((?:~|\$HOME)/\.docker/config\.json\b)",
        R"((?:~|\$HOME)/\.config/gh/hosts\.yml\b)",
        R"((?:~|\$HOME)/\.npmrc\b)",
        R"(\.git-credentials\b)",
        R"(\bsecurity\s+find-(?:generic|internet)-password\b)",
    };
    s["env_dump"] = {
        R"(\bprintenv\b)",
        R"((?:^|[;&|]\s*)env\s*\|)",
        R"(JSON\.stringify\(\s*process\.env\s*\))",
        R"(json\.dumps\(\s*(?:dict\(\s*)?os\.environ\b)",
    };
    s["browser_storage"] = {
        R"(\blocalStorage\b)",
        R"(\bsessionStorage\b)",
        R"(\bdocument\.cookie\b)",
        R"(\bindexedDB\b)",
    };
    s["network_call"] = {
        R"(\bfetch\s*\()",
        R"(\bXMLHttpRequest\b)",
        R"(\bsendBeacon\s*\()",
        R"(\bnew\s+Image\s*\()",
        R"(\bnew\s+WebSocket\s*\()",
    };
    s["keylogger"] = {
        R"(\bscript\s+-q\b)",
        R"(\bpynput\b)",
        R"(\blogkeys\b)",
        R"(\bxinput\s+test\b)",
        R"(\bkeyboard\.on_(?:press|release)\b)",
    };
    s["pipe_to_network"] = {
        R"(\|\s*curl\b[^\n]*\s(?:-d|--data(?:-binary|-raw)?|-F|-T|--upload-file)\s*["']?@-?)",
        R"(\|\s*n(?:c|cat|etcat)\s+[\w.\-]+\s+\d+)",
        R"(\bcurl\b[^\n]*\s(?:-d|--data(?:-binary)?|-F)\s*["']?@(?:~|\$HOME)?/?[\w./\-]*(?:\.ssh|\.env|\.aws|credentials))",
    };
    s["authorized_keys_write"] = {
        R"((?:>>?|\btee\b(?:\s+-a)?)\s*["']?[\w~$/{}.\-]*\.ssh/authorized_keys\b)",
        R"(\bauthorized_keys\b[^\n]*["'](?:a|w|a\+)["'])",
        R"((?:appendFile|writeFile)(?:Sync)?\s*\([^\n]*authorized_keys)",
    };
    // Provisional beacon heuristics; the dynamic rule uses beacon_min_events.
    s["cron_beacon"] = {
        R"(\bcrontab\b[^\n]*\b(?:curl|wget)\b)",
        R"(\*/\d+(?:\s+\*){4}[^\n]*\b(?:curl|wget)\b)",
        R"(\bwhile\s+(?:true|:)\s*;\s*do\b[^\n]*\b(?:curl|wget)\b[^\n]*\bsleep\b)",
    };
    s["miner"] = {
        R"(\bxmrig\b)",
        R"(\bminerd\b)",
        R"(\bcpuminer\b)",
        R"(stratum\+(?:tcp|ssl)://)",
        R"(\bcryptonight\b)",
        R"(--donate-level\b)",
        R"(\bnicehash\b)",
    };
    s["artifact_write"] = {
        R"(>>?\s*["']?[\w~$/{}.\-]*(?:/tmp/|\.bash_history|\.zsh_history|\.cache/|\.git/config))",
        R"(\bgit\s+config\b[^\n]*(?:credential|token|password|https?://[^\s@/]+:[^\s@/]+@))",
        R"(\btee\b(?:\s+-a)?\s+["']?[\w~$/{}.\-]*(?:/tmp/|\.bash_history|\.zsh_history|\.cache/))",
        R"(\bhistory\s+-s\b)",
    };
    s["cli_credential_flag"] = {
        R"((?:^|\s)--(?:api[-_]?key|access[-_]?token|auth[-_]?token|token|password|passwd|secret|client[-_]?secret)(?:=|\s+)["']?(?:\$\{?\w+\}?|[A-Za-z0-9_\-./+=]{8,}))",
        R"(\bcurl\b[^\n]*\s-u\s+["']?[\w.\-@]+:\$\{?\w+)",
    };
    s["url_credential_param"] = {
        R"(https?://[^\s"'`<>]*[?&](?:api[_-]?key|apikey|access[_-]?token|auth[_-]?token|token|secret|client[_-]?secret|password|passwd|key)=[^&\s"'`]+)",
    };
    c.exfil_hosts = {"webhook.site", "requestbin.com", "requestbin.net", "pipedream.net", "ngrok.io",
                     "ngrok-free.app", "interact.sh", "oast.fun", "burpcollaborator.net", "hookbin.com",
                     "beeceptor.com"};
    c.artifact_paths = {
        R"(/tmp/)", R"(\btempfile\.)", R"(\bos\.tmpdir\(\))", R"(\.bash_history)", R"(\.zsh_history)",
        R"(\.cache\b)", R"(\.git/config)", R"(\bcache\b)",
    };
    c.process_sinks = {"subprocess.run",        "subprocess.call",       "subprocess.Popen",  "subprocess.check_output",
                       "subprocess.check_call", "os.system",             "os.popen",          "os.execv",
                       "os.execvp",             "os.execve",             "child_process.exec", "execSync",
                       "spawn",                 "spawnSync",             "execFile",          "execFileSync",
                       "execa"};
    c.response_sinks = {"jsonify",  "JSONResponse", "make_response", "PlainTextResponse", "res.json",
                        "res.send", "res.end",      "response.json", "response.send",     "reply.send",
                        "ctx.json", "c.json",       "Response.json", "NextResponse.json"};
    return c;
}

namespace {

void append_unique(std::vector<std::string>& into, const std::vector<std::string>& from) {
    for (const auto& v : from) {
        if (std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
    }
}

}  // namespace

SignatureConfig SignatureConfig::from_json(const nlohmann::json& doc, const SignatureConfig& base) {
    if (!doc.is_object()) throw InputError("signature config must be a JSON object");
    SignatureConfig out = doc.value("replace", false) ? SignatureConfig{} : base;
    try {
        if (doc.contains("signatures")) {
            for (const auto& [family, patterns] : doc.at("signatures").items()) {
                const auto& known = families();
                if (std::find(known.begin(), known.end(), family) == known.end()) {
                    throw InputError("unknown signature family '" + family + "'");
                }
                append_unique(out.signatures[family], patterns.get<std::vector<std::string>>());
            }
        }
        append_unique(out.exfil_hosts, doc.value("exfil_hosts", std::vector<std::string>{}));
        append_unique(out.artifact_paths, doc.value("artifact_paths", std::vector<std::string>{}));
        append_unique(out.process_sinks, doc.value("process_sinks", std::vector<std::string>{}));
        append_unique(out.response_sinks, doc.value("response_sinks", std::vector<std::string>{}));
        out.beacon_min_events = doc.value("beacon_min_events", out.beacon_min_events);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed signature config: ") + e.what());
    }
    if (out.beacon_min_events < 1) throw InputError("beacon_min_events must be at least 1");
    for (auto& h : out.exfil_hosts) h = text::to_lower(h);
    return out;
}

SignatureConfig SignatureConfig::load(const std::filesystem::path& path, const SignatureConfig& base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read signature config " + path.string());
    try {
        return from_json(nlohmann::json::parse(in), base);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed signature config " + path.string() + ": " + e.what());
    }
}

nlohmann::json SignatureConfig::to_json() const {
    return {{"signatures", signatures},         {"exfil_hosts", exfil_hosts},
            {"artifact_paths", artifact_paths}, {"process_sinks", process_sinks},
            {"response_sinks", response_sinks}, {"beacon_min_events", beacon_min_events}};
}

std::string SignatureConfig::digest() const { return text::hex64(text::fnv1a64(to_json().dump())); }

namespace {

using IssueKey = std::tuple<std::string, LeakagePattern, std::string, Span>;

IssueKey key_of(const IssueRecord& r) { return {r.skill_id, r.pattern, r.file, r.span}; }

void recompute_channels(IssueRecord& r) {
    const auto c = classify_channel(r.evidence);
    r.channel = c.primary;
    r.secondary_channels = c.secondary;
}

}  // namespace

std::vector<IssueRecord> merge_issues(const std::vector<IssueRecord>& a, const std::vector<IssueRecord>& b) {
    std::map<IssueKey, IssueRecord> merged;
    for (const auto* list : {&a, &b}) {
        for (const auto& r : *list) {
            auto [it, inserted] = merged.emplace(key_of(r), r);
            if (inserted) continue;
            auto& into = it->second;
            for (const auto& e : r.evidence) {
                if (std::find(into.evidence.begin(), into.evidence.end(), e) == into.evidence.end()) {
                    into.evidence.push_back(e);
                }
            }
            if (r.severity && (!into.severity || *r.severity < *into.severity)) into.severity = r.severity;
            if (!into.lifecycle_phase) into.lifecycle_phase = r.lifecycle_phase;
            if (!into.evidence.empty()) recompute_channels(into);
        }
    }
    std::vector<IssueRecord> out;
    out.reserve(merged.size());
    for (auto& [key, r] : merged) out.push_back(std::move(r));
    std::sort(out.begin(), out.end(), issue_less);
    return out;
}

bool pattern_allowed(LeakagePattern pattern, Verdict verdict) {
    switch (verdict) {
        case Verdict::Benign: return false;
        case Verdict::Vulnerable: return family_of(pattern) == PatternFamily::Vulnerability;
        case Verdict::Malicious:
        case Verdict::NeedsReview: return true;
    }
    return false;
}

std::vector<IssueRecord> apply_verdict_context(const std::vector<IssueRecord>& issues, Verdict verdict) {
    std::vector<IssueRecord> out;
    for (const auto& r : issues) {
        if (pattern_allowed(r.pattern, verdict)) out.push_back(r);
    }
    return out;
}

std::optional<AttackSurface> classify_attack_surface(const SkillEvidence& evidence,
                                                     const std::vector<IssueRecord>& issues) {
    std::size_t code = 0;
    std::size_t nl = evidence.nl_findings.size();
    for (const auto& fa : evidence.files) {
        code += fa.sink_findings.size();
        code += static_cast<std::size_t>(std::count_if(fa.obfuscation_findings.begin(), fa.obfuscation_findings.end(),
                                                       [](const ObfuscationFinding& f) { return f.has_evidence(); }));
    }
    for (const auto& r : issues) {
        for (const auto& e : r.evidence) {
            (e.stream == Stream::NL ? nl : code) += 1;
        }
    }
    if (code > 0 && nl > 0) return AttackSurface::CodeAndNL;
    if (code > 0) return AttackSurface::CodeOnly;
    if (nl > 0) return AttackSurface::NLOnly;
    return std::nullopt;
}

}  // namespace skillscan
