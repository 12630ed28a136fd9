#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "skillscan/dynamic_classifier.hpp"

namespace skillscan {

ExecutionProfile aggregate_profile(const HitMap& hits, const std::string& skill_id,
                                   const std::vector<RoundKey>& timeouts) {
    ExecutionProfile p;
    p.skill_id = skill_id;
    for (const auto& [key, round_hits] : hits) {
        if (key.round < 1 || key.round > kRoundsPerCondition) {
            throw InputError("round " + std::to_string(key.round) + " outside 1.." +
                             std::to_string(kRoundsPerCondition));
        }
        if (round_hits.empty()) continue;
        (key.condition == Condition::Benign ? p.b_count : p.a_count) += 1;
        p.evidence.emplace(key, round_hits);
    }
    for (const auto& t : timeouts) {
        if (t.round < 1 || t.round > kRoundsPerCondition) {
            throw InputError("timed-out round " + std::to_string(t.round) + " outside 1.." +
                             std::to_string(kRoundsPerCondition));
        }
    }
    p.timed_out = timeouts;
    std::sort(p.timed_out.begin(), p.timed_out.end());
    p.timed_out.erase(std::unique(p.timed_out.begin(), p.timed_out.end()), p.timed_out.end());
    return p;
}

bool retain_dynamic(const ExecutionProfile& profile) { return profile.b_count >= 2 || profile.a_count >= 1; }

ProfileClass classify_profile(int b, int a) {
    if (a >= 1) return b <= 1 ? ProfileClass::AttackInduced : ProfileClass::DualTriggered;
    return b >= 2 ? ProfileClass::BaselineOnly : ProfileClass::BelowThreshold;
}

ProfileClass classify_profile(const ExecutionProfile& profile) {
    return classify_profile(profile.b_count, profile.a_count);
}

Routing route_verdict(ProfileClass cls, std::optional<Intent> intent) {
    switch (cls) {
        case ProfileClass::AttackInduced:
        case ProfileClass::BelowThreshold: {
            Routing r{cls == ProfileClass::AttackInduced ? Verdict::Vulnerable : Verdict::Benign, std::nullopt};
            if (intent) {
                r.warning = "reviewer intent '" + std::string(to_string(*intent)) + "' ignored for " +
                            std::string(to_string(cls)) + " profiles";
            }
            return r;
        }
        case ProfileClass::DualTriggered:
            if (!intent) return {Verdict::NeedsReview, std::nullopt};
            if (*intent == Intent::Declared) {
                throw InputError("intent 'declared' is not valid for dual_triggered profiles");
            }
            return {*intent == Intent::Undeclared ? Verdict::Vulnerable : Verdict::Malicious, std::nullopt};
        case ProfileClass::BaselineOnly:
            if (!intent) return {Verdict::NeedsReview, std::nullopt};
            switch (*intent) {
                case Intent::Declared: return {Verdict::Benign, std::nullopt};
                case Intent::Undeclared: return {Verdict::Vulnerable, std::nullopt};
                case Intent::Deliberate: return {Verdict::Malicious, std::nullopt};
            }
    }
    return {Verdict::NeedsReview, std::nullopt};
}

double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) throw InputError("kappa needs non-empty label vectors");
    if (a.size() != b.size()) {
        throw InputError("kappa label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    const double n = static_cast<double>(a.size());
    std::map<std::string, double> freq_a;
    std::map<std::string, double> freq_b;
    double agree = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        freq_a[a[i]] += 1.0;
        freq_b[b[i]] += 1.0;
        if (a[i] == b[i]) agree += 1.0;
    }
    const double p_o = agree / n;
    double p_e = 0.0;
    for (const auto& [label, count] : freq_a) {
        auto it = freq_b.find(label);
        if (it != freq_b.end()) p_e += (count / n) * (it->second / n);
    }
    if (std::abs(1.0 - p_e) < 1e-12) {
        if (a == b) return 1.0;
        throw InputError("kappa undefined: chance agreement is 1 but labelings differ");
    }
    return (p_o - p_e) / (1.0 - p_e);
}

TraceClassification classify_trace(const Trace& trace) {
    TraceClassification c;
    c.profile = aggregate_profile(detect_markers(trace.events, trace.credentials), trace.skill_id, trace.timeouts);
    c.profile_class = classify_profile(c.profile);
    c.retained = retain_dynamic(c.profile);
    c.verdict = route_verdict(c.profile_class, std::nullopt).verdict;
    return c;
}

void to_json(nlohmann::json& j, const VerdictRecord& r) {
    j = {{"skill_id", r.skill_id}, {"class", r.profile_class}, {"intent", r.intent},
         {"verdict", r.verdict},   {"reviewer", r.reviewer},   {"timestamp", r.timestamp}};
}

void from_json(const nlohmann::json& j, VerdictRecord& r) {
    r.skill_id = j.at("skill_id").get<std::string>();
    r.profile_class = j.at("class").get<ProfileClass>();
    r.intent = j.value("intent", nlohmann::json()).get<std::optional<Intent>>();
    r.verdict = j.at("verdict").get<Verdict>();
    r.reviewer = j.value("reviewer", std::string());
    r.timestamp = j.value("timestamp", std::string());
}

VerdictLedger::VerdictLedger(std::filesystem::path path) : path_(std::move(path)) {}

void VerdictLedger::append(const VerdictRecord& record) const {
    if (record.skill_id.empty()) throw ArgumentError("verdict record needs a skill_id");
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to verdict ledger " + path_.string());
    out << nlohmann::json(record).dump() << '\n';
}

std::vector<VerdictRecord> VerdictLedger::records() const {
    std::vector<VerdictRecord> out;
    if (!std::filesystem::exists(path_)) return out;
    std::ifstream in(path_);
    if (!in) throw IoError("cannot read verdict ledger " + path_.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<VerdictRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::map<std::pair<std::string, std::string>, VerdictRecord> VerdictLedger::latest_by_reviewer() const {
    std::map<std::pair<std::string, std::string>, VerdictRecord> out;
    for (auto& r : records()) out[{r.skill_id, r.reviewer}] = r;
    return out;
}

std::map<std::string, VerdictRecord> VerdictLedger::effective() const { return effective_verdicts(records()); }

std::map<std::string, VerdictRecord> effective_verdicts(const std::vector<VerdictRecord>& records) {
    std::map<std::string, VerdictRecord> out;
    for (const auto& r : records) out[r.skill_id] = r;
    return out;
}

}  // namespace skillscan
