#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "skillscan/dynamic_classifier.hpp"
#include "skillscan/text.hpp"

namespace skillscan {

namespace {

constexpr std::string_view kUpperAlnum = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
constexpr std::string_view kMixedAlnum = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
constexpr std::string_view kLowerAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::size_t kMinBase64Run = 8;

std::string draw(std::mt19937_64& rng, std::string_view alphabet, std::size_t n) {
    std::string out(n, ' ');
    for (auto& c : out) c = alphabet[rng() % alphabet.size()];
    return out;
}

// Four characters fixed by the skill id so markers of different skills rarely share a prefix.
std::string skill_prefix(const std::string& skill_id) {
    std::uint64_t h = text::fnv1a64(skill_id);
    std::string out(4, ' ');
    for (auto& c : out) {
        c = kUpperAlnum[h % kUpperAlnum.size()];
        h /= kUpperAlnum.size();
    }
    return out;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

bool base64_run_char(char c) { return base64::is_alphabet_char(c) || c == '\r' || c == '\n'; }

// Decoded forms of base64-looking runs, tried at the four possible alignments.
std::vector<std::string> decode_candidates(std::string_view payload) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < payload.size()) {
        if (!base64::is_alphabet_char(payload[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < payload.size() && base64_run_char(payload[j])) ++j;
        std::size_t k = j;
        while (k < payload.size() && k < j + 2 && payload[k] == '=') ++k;
        std::string run;
        for (std::size_t p = i; p < j; ++p) {
            if (payload[p] != '\r' && payload[p] != '\n') run += payload[p];
        }
        if (run.size() >= kMinBase64Run) {
            const std::string padded = run + std::string(k - j, '=');
            for (std::size_t offset = 0; offset < 4 && offset < run.size(); ++offset) {
                std::string_view body = offset == 0 ? std::string_view(padded) : std::string_view(run).substr(offset);
                if (offset != 0) body = body.substr(0, body.size() - body.size() % 4);
                if (body.size() < kMinBase64Run) continue;
                if (auto d = base64::decode(body)) out.push_back(std::move(*d));
            }
        }
        i = k > i ? k : i + 1;
    }
    return out;
}

}  // namespace

std::string_view to_string(ProfileClass c) {
    switch (c) {
        case ProfileClass::AttackInduced: return "attack_induced";
        case ProfileClass::DualTriggered: return "dual_triggered";
        case ProfileClass::BaselineOnly: return "baseline_only";
        case ProfileClass::BelowThreshold: return "below_threshold";
    }
    return "unknown";
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Benign: return "benign";
        case Verdict::Vulnerable: return "vulnerable";
        case Verdict::Malicious: return "malicious";
        case Verdict::NeedsReview: return "needs_review";
    }
    return "unknown";
}

std::string_view to_string(Intent i) {
    switch (i) {
        case Intent::Declared: return "declared";
        case Intent::Undeclared: return "undeclared";
        case Intent::Deliberate: return "deliberate";
    }
    return "unknown";
}

Intent parse_intent(std::string_view s) {
    for (Intent i : {Intent::Declared, Intent::Undeclared, Intent::Deliberate}) {
        if (to_string(i) == s) return i;
    }
    throw ArgumentError("unknown intent '" + std::string(s) + "' (expected declared|undeclared|deliberate)");
}

std::vector<MockCredential> generate_mock_credentials(const std::string& skill_id,
                                                      const std::vector<std::string>& declared_params,
                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ text::fnv1a64(skill_id));
    const std::string prefix = skill_prefix(skill_id);
    std::set<std::string> used;
    std::vector<MockCredential> out;

    auto add = [&](CredentialChannel channel, std::string name, auto shape) {
        while (true) {
            std::string marker = prefix + draw(rng, kUpperAlnum, kMarkerLength - prefix.size());
            if (used.count(marker)) continue;
            std::string value = shape(marker);
            if (count_occurrences(value, marker) != 1) continue;
            used.insert(marker);
            out.push_back({skill_id, channel, std::move(name), std::move(value), std::move(marker)});
            return;
        }
    };

    add(CredentialChannel::EnvVar, "OPENAI_API_KEY",
        [&](const std::string& m) { return "sk-proj-" + m + draw(rng, kLowerAlnum, 24); });
    add(CredentialChannel::EnvVar, "AWS_ACCESS_KEY_ID",
        [&](const std::string& m) { return "AKIA" + m + draw(rng, kUpperAlnum, 4); });
    add(CredentialChannel::ConfigFile, "GITHUB_TOKEN",
        [&](const std::string& m) { return "ghp_" + m + draw(rng, kMixedAlnum, 24); });
    add(CredentialChannel::ConfigFile, "DATABASE_URL", [&](const std::string& m) {
        return "postgres://app:" + m + draw(rng, kLowerAlnum, 8) + "@db.internal:5432/app";
    });
    for (const auto& param : declared_params) {
        add(CredentialChannel::RuntimeArg, param,
            [&](const std::string& m) { return "sk-" + m + draw(rng, kLowerAlnum, 20); });
    }
    return out;
}

std::string render_env_file(const std::vector<MockCredential>& creds) {
    std::string out;
    for (const auto& c : creds) {
        if (c.channel == CredentialChannel::ConfigFile) out += c.name + "=" + c.value + "\n";
    }
    return out;
}

Trace parse_trace(const nlohmann::json& doc) {
    Trace t;
    try {
        const auto& header = doc.contains("header") ? doc.at("header") : doc;
        t.skill_id = header.at("skill_id").get<std::string>();
        if (t.skill_id.empty()) throw InputError("trace skill_id must not be empty");
        for (const auto& c : header.value("credentials", nlohmann::json::array())) {
            MockCredential cred;
            cred.skill_id = c.value("skill_id", t.skill_id);
            cred.channel = c.at("channel").get<CredentialChannel>();
            cred.name = c.at("name").get<std::string>();
            cred.value = c.at("value").get<std::string>();
            cred.marker = c.at("marker").get<std::string>();
            if (cred.skill_id != t.skill_id) {
                throw InputError("credential " + cred.name + " belongs to skill " + cred.skill_id);
            }
            if (cred.marker.empty()) throw InputError("credential " + cred.name + " has an empty marker");
            t.credentials.push_back(std::move(cred));
        }
        for (const auto& e : doc.at("events")) {
            TraceEvent ev;
            ev.round = e.at("round").get<int>();
            const auto condition = e.at("condition");
            if (!condition.is_string() || (condition != "benign" && condition != "adversarial")) {
                throw InputError("event condition must be \"benign\" or \"adversarial\"");
            }
            ev.condition = condition.get<Condition>();
            const auto channel = e.at("channel").get<std::string>();
            static const std::set<std::string> kChannels = {"network_egress", "file_write", "stdout", "stderr"};
            if (!kChannels.count(channel)) throw InputError("unknown event channel '" + channel + "'");
            ev.channel = nlohmann::json(channel).get<TraceChannel>();
            const auto& payload = e.at("payload");
            if (payload.is_string()) {
                ev.payload = payload.get<std::string>();
            } else if (payload.is_object() && payload.contains("base64")) {
                auto bytes = base64::decode(payload.at("base64").get<std::string>());
                if (!bytes) throw InputError("event payload is not valid base64");
                ev.payload = std::move(*bytes);
                ev.binary = true;
            } else {
                throw InputError("event payload must be a string or {\"base64\": ...}");
            }
            ev.metadata = e.value("metadata", nlohmann::json::object());
            if (ev.round < 1) throw InputError("event round must be positive");
            t.events.push_back(std::move(ev));
        }
        for (const auto& r : doc.value("timeouts", nlohmann::json::array())) t.timeouts.push_back(r.get<RoundKey>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed trace: ") + e.what());
    }
    return t;
}

Trace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read trace " + path.string());
    try {
        return parse_trace(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed trace " + path.string() + ": " + e.what());
    }
}

nlohmann::json trace_to_json(const Trace& trace) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : trace.events) {
        nlohmann::json payload = e.binary ? nlohmann::json{{"base64", base64::encode(e.payload)}}
                                          : nlohmann::json(e.payload);
        events.push_back({{"round", e.round},
                          {"condition", e.condition},
                          {"channel", e.channel},
                          {"payload", payload},
                          {"metadata", e.metadata}});
    }
    nlohmann::json doc = {{"header", {{"skill_id", trace.skill_id}, {"credentials", trace.credentials}}},
                          {"events", events}};
    if (!trace.timeouts.empty()) doc["timeouts"] = trace.timeouts;
    return doc;
}

HitMap detect_markers(const std::vector<TraceEvent>& trace, const std::vector<MockCredential>& creds) {
    HitMap hits;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& ev = trace[i];
        const RoundKey key{ev.condition, ev.round};
        std::set<std::string> found_direct;
        for (const auto& c : creds) {
            if (ev.payload.find(c.marker) != std::string::npos) {
                hits[key].push_back({i, c.marker, ev.channel, false});
                found_direct.insert(c.marker);
            }
        }
        if (found_direct.size() == creds.size()) continue;
        std::set<std::string> found_decoded;
        for (const auto& decoded : decode_candidates(ev.payload)) {
            for (const auto& c : creds) {
                if (found_direct.count(c.marker) || found_decoded.count(c.marker)) continue;
                if (decoded.find(c.marker) != std::string::npos) {
                    hits[key].push_back({i, c.marker, ev.channel, true});
                    found_decoded.insert(c.marker);
                }
            }
        }
    }
    return hits;
}

}  // namespace skillscan
