#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "skillscan/report.hpp"

namespace skillscan {

namespace {

std::string key(LeakagePattern p) { return std::string(to_string(p)); }
std::string key(AttackSurface s) { return std::string(to_string(s)); }
std::string key(LeakChannel c) { return std::string(to_string(c)); }
std::string key(CredentialCategory c) { return std::string(to_string(c)); }
std::string key(Language l) { return std::string(to_string(l)); }

std::string fixed1(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << v;
    return os.str();
}

std::string fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string share_text(const Share& s) {
    return std::to_string(s.count) + "/" + std::to_string(s.denominator) + " (" + fixed1(s.percent) + "%)";
}

std::string pattern_label(LeakagePattern p) {
    switch (p) {
        case LeakagePattern::HardcodedCredentials: return "Hardcoded credentials";
        case LeakagePattern::InsecureStorage: return "Insecure storage";
        case LeakagePattern::InformationExposure: return "Information exposure";
        case LeakagePattern::ArtifactLeakage: return "Artifact leakage";
        case LeakagePattern::RemoteExploitation: return "Remote exploitation";
        case LeakagePattern::CredentialCompromise: return "Credential compromise";
        case LeakagePattern::DataExfiltration: return "Data exfiltration";
        case LeakagePattern::DefenseEvasion: return "Defense evasion";
        case LeakagePattern::Persistence: return "Persistence";
        case LeakagePattern::ResourceHijacking: return "Resource hijacking";
    }
    return "Unknown";
}

}  // namespace

Share Share::of(std::size_t count, std::size_t denominator) {
    Share s;
    s.count = count;
    s.denominator = denominator;
    s.percent = denominator == 0 ? 0.0
                                 : std::round(1000.0 * static_cast<double>(count) / static_cast<double>(denominator)) / 10.0;
    return s;
}

CorpusStats aggregate(const std::vector<SkillScan>& skills, const std::vector<IssueRecord>& issues) {
    std::map<std::string, const SkillScan*> by_id;
    for (const auto& s : skills) by_id[s.skill_id] = &s;
    std::map<std::string, std::vector<const IssueRecord*>> per_skill;
    for (const auto& r : issues) {
        auto it = by_id.find(r.skill_id);
        if (it == by_id.end()) throw ConsistencyError("issue references unscanned skill '" + r.skill_id + "'");
        if (!it->second->verdict) throw ConsistencyError("skill '" + r.skill_id + "' has issues but no verdict");
        per_skill[r.skill_id].push_back(&r);
    }

    CorpusStats st;
    auto& t = st.totals;
    t.skills_scanned = skills.size();
    std::vector<const SkillScan*> affected;
    for (const auto& s : skills) {
        t.parse_diagnostics += s.diagnostics.size();
        if (s.flagged) ++t.skills_flagged;
        if (s.verdict == Verdict::NeedsReview) ++t.needs_review_skills;
        if (!per_skill.count(s.skill_id)) continue;
        if (s.verdict == Verdict::Vulnerable) {
            ++t.vulnerable_skills;
            affected.push_back(&s);
        } else if (s.verdict == Verdict::Malicious) {
            ++t.malicious_skills;
            affected.push_back(&s);
        }
    }
    t.skills_affected = affected.size();
    const std::size_t denom = affected.size();

    std::map<std::string, std::size_t> category_n, language_n, surface_n, channel_n, pattern_skills, pattern_issues;
    std::vector<std::size_t> counts;
    for (const auto* s : affected) {
        const auto& list = per_skill.at(s->skill_id);
        counts.push_back(list.size());
        t.issue_count += list.size();
        for (auto c : s->credential_categories) ++category_n[key(c)];
        if (s->languages.empty()) ++language_n["none"];
        for (auto l : s->languages) ++language_n[key(l)];
        if (s->surface) ++surface_n[key(*s->surface)];
        std::set<std::string> patterns, channels;
        for (const auto* r : list) {
            ++pattern_issues[key(r->pattern)];
            ++st.family_issue_count[std::string(to_string(r->family()))];
            patterns.insert(key(r->pattern));
            channels.insert(key(r->channel));
        }
        for (const auto& p : patterns) ++pattern_skills[p];
        for (const auto& c : channels) ++channel_n[c];
    }
    for (auto f : {PatternFamily::Vulnerability, PatternFamily::Malicious}) st.family_issue_count.emplace(std::string(to_string(f)), 0);

    for (auto c : kAllCategories) st.by_category[key(c)] = Share::of(category_n[key(c)], denom);
    for (auto l : {Language::Python, Language::JavaScript, Language::Shell, Language::Other}) {
        st.by_language[key(l)] = Share::of(language_n[key(l)], denom);
    }
    st.by_language["none"] = Share::of(language_n["none"], denom);
    for (auto s : {AttackSurface::CodeAndNL, AttackSurface::CodeOnly, AttackSurface::NLOnly}) {
        st.by_surface[key(s)] = Share::of(surface_n[key(s)], denom);
    }
    for (auto c : {LeakChannel::Stdout, LeakChannel::File, LeakChannel::Network}) {
        st.by_channel[key(c)] = Share::of(channel_n[key(c)], denom);
    }
    for (auto p : kAllPatterns) {
        PatternStat ps;
        ps.family = family_of(p);
        ps.issues = Share::of(pattern_issues[key(p)], st.family_issue_count[std::string(to_string(ps.family))]);
        ps.skills = Share::of(pattern_skills[key(p)], denom);
        st.by_pattern[key(p)] = ps;
    }
    if (!counts.empty()) {
        std::sort(counts.begin(), counts.end());
        st.mean_issues_per_skill = static_cast<double>(t.issue_count) / static_cast<double>(counts.size());
        const std::size_t mid = counts.size() / 2;
        st.median_issues_per_skill = counts.size() % 2 == 1
                                         ? static_cast<double>(counts[mid])
                                         : (static_cast<double>(counts[mid - 1]) + static_cast<double>(counts[mid])) / 2.0;
    }
    return st;
}

void to_json(nlohmann::json& j, const Report& r) {
    j = {{"schema_version", r.schema_version},
         {"tool_version", r.tool_version},
         {"config_digests", r.config_digests},
         {"snapshot_timestamp", r.snapshot_timestamp},
         {"population_size", r.population_size},
         {"stats", r.stats},
         {"skills", r.skills},
         {"issues", r.issues},
         {"ledger", r.ledger}};
}

void from_json(const nlohmann::json& j, Report& r) {
    r.schema_version = j.at("schema_version").get<int>();
    r.tool_version = j.at("tool_version").get<std::string>();
    r.config_digests = j.at("config_digests").get<std::map<std::string, std::string>>();
    r.snapshot_timestamp = j.at("snapshot_timestamp").get<std::string>();
    r.population_size = j.at("population_size").get<std::size_t>();
    r.stats = j.at("stats").get<CorpusStats>();
    r.skills = j.at("skills").get<std::vector<SkillScan>>();
    r.issues = j.at("issues").get<std::vector<IssueRecord>>();
    r.ledger = j.at("ledger").get<std::vector<VerdictRecord>>();
}

Report build_report(const CorpusScan& scan, const std::map<std::string, std::string>& config_digests,
                    const std::vector<VerdictRecord>& ledger) {
    Report r;
    r.config_digests = config_digests;
    r.snapshot_timestamp = scan.timestamp;
    r.population_size = scan.population_size;
    r.skills = scan.skills;
    for (auto& s : r.skills) {
        r.issues.insert(r.issues.end(), s.issues.begin(), s.issues.end());
        s.issues.clear();
    }
    std::sort(r.skills.begin(), r.skills.end(),
              [](const SkillScan& a, const SkillScan& b) { return a.skill_id < b.skill_id; });
    std::sort(r.issues.begin(), r.issues.end(), issue_less);
    r.ledger = ledger;
    r.stats = aggregate(r.skills, r.issues);
    return r;
}

ReportFormat parse_format(std::string_view name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "summary") return ReportFormat::Summary;
    if (name == "interchange" || name == "sarif") return ReportFormat::Interchange;
    throw ArgumentError("unknown report format '" + std::string(name) + "' (expected json|summary|interchange)");
}

std::string emit(const Report& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::Json: return emit_json(report);
        case ReportFormat::Summary: return emit_summary(report);
        case ReportFormat::Interchange: return emit_interchange(report);
    }
    throw ArgumentError("unknown report format");
}

std::string emit_json(const Report& report) { return nlohmann::json(report).dump(2) + "\n"; }

std::string emit_summary(const Report& report) {
    const auto& st = report.stats;
    const auto& t = st.totals;
    std::ostringstream os;
    os << "skillscan " << report.tool_version << " (report schema " << report.schema_version << ")\n";
    if (!report.snapshot_timestamp.empty()) os << "snapshot: " << report.snapshot_timestamp << "\n";
    os << "population: " << report.population_size << "\n\n";

    os << "Overview\n";
    os << "  skills scanned      " << t.skills_scanned << "\n";
    os << "  flagged             " << t.skills_flagged << "\n";
    os << "  affected            " << t.skills_affected << " (vulnerable " << t.vulnerable_skills << ", malicious "
       << t.malicious_skills << ")\n";
    os << "  needs review        " << t.needs_review_skills << "\n";
    os << "  issues              " << t.issue_count << " (mean " << fixed2(st.mean_issues_per_skill) << ", median "
       << fixed1(st.median_issues_per_skill) << " per affected skill)\n";
    os << "  parse diagnostics   " << t.parse_diagnostics << "\n\n";

    os << "Attack surface (share of affected skills)\n";
    for (auto s : {AttackSurface::CodeAndNL, AttackSurface::CodeOnly, AttackSurface::NLOnly}) {
        const char* label = s == AttackSurface::CodeAndNL ? "Code + NL" : (s == AttackSurface::CodeOnly ? "Code only" : "NL only");
        os << "  " << pad(label, 20) << share_text(st.by_surface.at(key(s))) << "\n";
    }
    os << "\n";

    for (auto f : {PatternFamily::Vulnerability, PatternFamily::Malicious}) {
        const std::string fam(to_string(f));
        os << (f == PatternFamily::Vulnerability ? "Vulnerability" : "Malicious") << " patterns ("
           << st.family_issue_count.at(fam) << " issues; issue share within family, skill share of affected)\n";
        for (auto p : kAllPatterns) {
            if (family_of(p) != f) continue;
            const auto& ps = st.by_pattern.at(key(p));
            os << "  " << pad(pattern_label(p), 24) << "issues " << pad(share_text(ps.issues), 20) << "skills "
               << share_text(ps.skills) << "\n";
        }
        os << "\n";
    }

    os << "Leakage channels (skills; overlapping)\n";
    for (auto c : {LeakChannel::Stdout, LeakChannel::File, LeakChannel::Network}) {
        os << "  " << pad(key(c), 20) << share_text(st.by_channel.at(key(c))) << "\n";
    }
    os << "\nCredential categories (skills; overlapping)\n";
    for (auto c : kAllCategories) os << "  " << pad(key(c), 28) << share_text(st.by_category.at(key(c))) << "\n";
    os << "\nLanguages (skills; overlapping)\n";
    for (const auto& [lang, share] : st.by_language) os << "  " << pad(lang, 20) << share_text(share) << "\n";

    if (!report.issues.empty()) {
        os << "\nIssues\n";
        for (const auto& r : report.issues) {
            std::string where = r.file;
            if (r.region) where += ":" + std::to_string(r.region->start_line);
            os << "  " << r.skill_id << "  " << where << "  " << to_string(r.pattern) << "  " << to_string(r.channel)
               << "  [" << r.rule << "]\n";
        }
    }
    bool any_diag = false;
    for (const auto& s : report.skills) {
        for (const auto& d : s.diagnostics) {
            if (!any_diag) os << "\nDiagnostics\n";
            any_diag = true;
            os << "  " << s.skill_id << "  " << d.file << ": " << d.message << "\n";
        }
    }
    return os.str();
}

std::string emit_interchange(const Report& report) {
    nlohmann::json rules = nlohmann::json::array();
    std::map<std::string, std::size_t> rule_index;
    for (const auto& rule : rule_table()) {
        rule_index[rule.id] = rules.size();
        rules.push_back({{"id", rule.id},
                         {"name", pattern_label(rule.pattern)},
                         {"shortDescription", {{"text", rule.summary}}},
                         {"properties", {{"pattern", rule.pattern}, {"family", family_of(rule.pattern)}}}});
    }
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : report.issues) {
        std::string level;
        if (r.severity) {
            level = *r.severity == 1 ? "error" : (*r.severity == 2 ? "warning" : "note");
        } else {
            level = r.family() == PatternFamily::Malicious ? "error" : "warning";
        }
        nlohmann::json result = {
            {"ruleId", r.rule},
            {"level", level},
            {"message", {{"text", pattern_label(r.pattern) + " via " + std::string(to_string(r.channel)) + ": " +
                                      rule_by_id(r.rule).summary}}},
            {"properties",
             {{"skill_id", r.skill_id}, {"pattern", r.pattern}, {"channel", r.channel}, {"family", r.family()}}}};
        if (auto it = rule_index.find(r.rule); it != rule_index.end()) result["ruleIndex"] = it->second;
        if (r.region) {
            result["locations"] = nlohmann::json::array(
                {{{"physicalLocation",
                   {{"artifactLocation", {{"uri", r.skill_id + "/" + r.file}}},
                    {"region",
                     {{"startLine", r.region->start_line},
                      {"startColumn", r.region->start_column},
                      {"endLine", r.region->end_line},
                      {"endColumn", r.region->end_column}}}}}}});
        } else {
            result["locations"] =
                nlohmann::json::array({{{"logicalLocations", nlohmann::json::array({{{"name", r.skill_id + "/" + r.file}}})}}});
        }
        results.push_back(std::move(result));
    }
    nlohmann::json doc = {
        {"$schema", "https://json.schemastore.org/sarif-2.1.0.json"},
        {"version", "2.1.0"},
        {"runs", nlohmann::json::array({{{"tool", {{"driver", {{"name", "skillscan"},
                                                               {"version", report.tool_version},
                                                               {"rules", rules}}}}},
                                         {"results", results}}})}};
    return doc.dump(2) + "\n";
}

Report parse_report(const nlohmann::json& doc) {
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kSchemaVersion) {
            throw InputError("unsupported report schema version " + std::to_string(version));
        }
        return doc.get<Report>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed report: ") + e.what());
    }
}

Report load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read report " + path.string());
    try {
        return parse_report(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed report " + path.string() + ": " + e.what());
    }
}

}  // namespace skillscan
