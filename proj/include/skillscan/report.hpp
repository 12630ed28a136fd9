#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "skillscan/pipeline.hpp"

namespace skillscan {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

/// A count with the denominator it is a share of; percent is rounded to one decimal.
struct Share {
    std::size_t count = 0;
    std::size_t denominator = 0;
    double percent = 0.0;

    static Share of(std::size_t count, std::size_t denominator);
    friend bool operator==(const Share&, const Share&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Share, count, denominator, percent)

/// Issue share is within the pattern's family; skill share is within affected skills and
/// overlaps across patterns.
struct PatternStat {
    PatternFamily family = PatternFamily::Vulnerability;
    Share issues;
    Share skills;

    friend bool operator==(const PatternStat&, const PatternStat&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PatternStat, family, issues, skills)

struct Totals {
    std::size_t skills_scanned = 0;
    std::size_t skills_flagged = 0;
    std::size_t skills_affected = 0;
    std::size_t issue_count = 0;
    std::size_t vulnerable_skills = 0;
    std::size_t malicious_skills = 0;
    std::size_t needs_review_skills = 0;
    std::size_t parse_diagnostics = 0;

    friend bool operator==(const Totals&, const Totals&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Totals, skills_scanned, skills_flagged, skills_affected, issue_count,
                                   vulnerable_skills, malicious_skills, needs_review_skills, parse_diagnostics)

/// Distribution over affected skills (Vulnerable or Malicious with at least one issue).
/// Category, language, channel and pattern skill counts are overlapping memberships.
struct CorpusStats {
    Totals totals;
    std::map<std::string, Share> by_category;
    std::map<std::string, Share> by_language;
    std::map<std::string, Share> by_surface;
    std::map<std::string, PatternStat> by_pattern;
    std::map<std::string, Share> by_channel;
    std::map<std::string, std::size_t> family_issue_count;
    double mean_issues_per_skill = 0.0;
    double median_issues_per_skill = 0.0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CorpusStats, totals, by_category, by_language, by_surface, by_pattern, by_channel,
                                   family_issue_count, mean_issues_per_skill, median_issues_per_skill)

/// Throws ConsistencyError when an issue names an unscanned skill, or when a skill with
/// issues has no verdict.
CorpusStats aggregate(const std::vector<SkillScan>& skills, const std::vector<IssueRecord>& issues);

struct Report {
    int schema_version = kSchemaVersion;
    std::string tool_version{kToolVersion};
    std::map<std::string, std::string> config_digests;
    std::string snapshot_timestamp;
    std::size_t population_size = 0;
    CorpusStats stats;
    std::vector<SkillScan> skills;    // per-skill issues live in `issues`
    std::vector<IssueRecord> issues;  // sorted by skill, file, offset
    std::vector<VerdictRecord> ledger;

    friend bool operator==(const Report&, const Report&) = default;
};

void to_json(nlohmann::json& j, const Report& r);
void from_json(const nlohmann::json& j, Report& r);

Report build_report(const CorpusScan& scan, const std::map<std::string, std::string>& config_digests,
                    const std::vector<VerdictRecord>& ledger = {});

enum class ReportFormat { Json, Summary, Interchange };

/// "json", "summary", "interchange" (alias "sarif"); throws ArgumentError otherwise.
ReportFormat parse_format(std::string_view name);

std::string emit(const Report& report, ReportFormat format);
std::string emit_json(const Report& report);
std::string emit_summary(const Report& report);
/// SARIF 2.1.0; Network -> error, Logging -> warning, FileIO -> note. Issues without a sink
/// severity are errors for the malicious family and warnings otherwise.
std::string emit_interchange(const Report& report);

/// Throws InputError for malformed documents or an unsupported schema version.
Report parse_report(const nlohmann::json& doc);
Report load_report(const std::filesystem::path& path);

}  // namespace skillscan
