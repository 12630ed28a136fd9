#include <fstream>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "skillscan/report.hpp"
#include "test_util.hpp"

using namespace skillscan;
using skillscan::testing::TempDir;

namespace {

IssueRecord issue(const std::string& skill, LeakagePattern p, LeakChannel ch, std::size_t offset) {
    IssueRecord r;
    r.skill_id = skill;
    r.pattern = p;
    for (const auto& rule : rule_table()) {
        if (rule.pattern == p) {
            r.rule = rule.id;
            break;
        }
    }
    r.channel = ch;
    r.file = "f.py";
    r.span = {offset, offset + 1};
    EvidenceItem e;
    e.channel = ch;
    e.file = "f.py";
    r.evidence = {e};
    return r;
}

SkillScan skill(const std::string& id, std::optional<Verdict> v) {
    SkillScan s;
    s.skill_id = id;
    s.verdict = v;
    s.flagged = v.has_value();
    s.languages = {Language::Python};
    s.surface = AttackSurface::CodeOnly;
    return s;
}

const CorpusScan& listings_scan() {
    static const CorpusScan s = [] {
        const auto snap = load_corpus(skillscan::testing::fixtures_dir() / "listings");
        return scan_corpus_serial(snap, Scanner());
    }();
    return s;
}

Report listings_report() { return build_report(listings_scan(), ScanConfig::defaults().digests()); }

}  // namespace

TEST(Share, RoundsToOneDecimal) {
    EXPECT_EQ(Share::of(1, 3).percent, 33.3);
    EXPECT_EQ(Share::of(2, 3).percent, 66.7);
    EXPECT_EQ(Share::of(2, 13).percent, 15.4);
    EXPECT_EQ(Share::of(0, 0).percent, 0.0);
    EXPECT_EQ(Share::of(5, 5).percent, 100.0);
}

TEST(Aggregate, MeanAndMedianOverAffectedSkills) {
    std::vector<SkillScan> skills = {skill("a", Verdict::Malicious), skill("b", Verdict::Malicious),
                                     skill("c", Verdict::Malicious), skill("d", Verdict::Benign)};
    std::vector<IssueRecord> issues;
    const std::map<std::string, int> counts = {{"a", 1}, {"b", 2}, {"c", 6}};
    for (const auto& [id, n] : counts) {
        for (int i = 0; i < n; ++i) issues.push_back(issue(id, LeakagePattern::RemoteExploitation, LeakChannel::Network, i));
    }
    const auto st = aggregate(skills, issues);
    EXPECT_DOUBLE_EQ(st.mean_issues_per_skill, 3.0);
    EXPECT_DOUBLE_EQ(st.median_issues_per_skill, 2.0);
    EXPECT_EQ(st.totals.skills_affected, 3u);
    EXPECT_EQ(st.totals.issue_count, 9u);
}

TEST(Aggregate, SingleLoggingIssue) {
    const auto st = aggregate({skill("a", Verdict::Vulnerable)},
                              {issue("a", LeakagePattern::InformationExposure, LeakChannel::Stdout, 0)});
    const auto& ie = st.by_pattern.at("information_exposure");
    EXPECT_EQ(ie.issues, Share::of(1, 1));
    EXPECT_EQ(ie.skills, Share::of(1, 1));
    EXPECT_EQ(st.by_channel.at("stdout").count, 1u);
    EXPECT_EQ(st.by_channel.at("network").count, 0u);
    EXPECT_EQ(st.family_issue_count.at("malicious"), 0u);
    EXPECT_EQ(st.by_pattern.at("remote_exploitation").issues.denominator, 0u);
}

TEST(Aggregate, Invariants) {
    std::mt19937_64 rng(17);
    const std::vector<Verdict> verdicts = {Verdict::Benign, Verdict::Vulnerable, Verdict::Malicious,
                                           Verdict::NeedsReview};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SkillScan> skills;
        std::vector<IssueRecord> issues;
        const int n = static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            const auto v = verdicts[rng() % verdicts.size()];
            const std::string id = "s" + std::to_string(i);
            auto s = skill(id, v);
            s.surface = static_cast<AttackSurface>(rng() % 3);
            skills.push_back(s);
            if (v == Verdict::Benign) continue;
            const int k = static_cast<int>(rng() % 4);
            for (int j = 0; j < k; ++j) {
                auto p = kAllPatterns[rng() % kAllPatterns.size()];
                if (!pattern_allowed(p, v)) continue;
                issues.push_back(issue(id, p, static_cast<LeakChannel>(rng() % 3), j));
            }
        }
        const auto st = aggregate(skills, issues);
        const auto& t = st.totals;
        std::size_t with_vuln_verdict = 0, with_mal_verdict = 0, affected_issues = 0;
        for (const auto& s : skills) {
            const auto k = std::count_if(issues.begin(), issues.end(), [&](const auto& i) { return i.skill_id == s.skill_id; });
            if (k == 0) continue;
            if (s.verdict == Verdict::Vulnerable) ++with_vuln_verdict;
            if (s.verdict == Verdict::Malicious) ++with_mal_verdict;
            if (s.verdict == Verdict::Vulnerable || s.verdict == Verdict::Malicious) affected_issues += k;
        }
        EXPECT_EQ(t.skills_affected, with_vuln_verdict + with_mal_verdict);
        EXPECT_EQ(t.vulnerable_skills + t.malicious_skills, t.skills_affected);
        // Statistics cover affected skills only; NeedsReview issues stay out of the counts.
        EXPECT_EQ(t.issue_count, affected_issues);

        std::map<PatternFamily, std::size_t> fam;
        for (const auto& [name, ps] : st.by_pattern) {
            fam[ps.family] += ps.issues.count;
            EXPECT_EQ(ps.issues.denominator, st.family_issue_count.at(std::string(to_string(ps.family))));
            EXPECT_LE(ps.skills.count, t.skills_affected);
        }
        EXPECT_EQ(fam[PatternFamily::Vulnerability], st.family_issue_count.at("vulnerability"));
        EXPECT_EQ(fam[PatternFamily::Malicious], st.family_issue_count.at("malicious"));
        EXPECT_EQ(fam[PatternFamily::Vulnerability] + fam[PatternFamily::Malicious], t.issue_count);

        std::size_t surfaces = 0;
        for (const auto& [name, sh] : st.by_surface) surfaces += sh.count;
        EXPECT_EQ(surfaces, t.skills_affected);
        EXPECT_EQ(st.by_pattern.size(), 10u);
        EXPECT_EQ(st.by_category.size(), 9u);
    }
}

TEST(Aggregate, ConsistencyErrors) {
    EXPECT_THROW(aggregate({}, {issue("ghost", LeakagePattern::Persistence, LeakChannel::Network, 0)}),
                 ConsistencyError);
    EXPECT_THROW(aggregate({skill("a", std::nullopt)}, {issue("a", LeakagePattern::Persistence, LeakChannel::Network, 0)}),
                 ConsistencyError);
}

TEST(Aggregate, EmptyCorpusIsZeroedButComplete) {
    const auto st = aggregate({}, {});
    EXPECT_EQ(st.totals, Totals{});
    EXPECT_EQ(st.mean_issues_per_skill, 0.0);
    EXPECT_EQ(st.median_issues_per_skill, 0.0);
    EXPECT_EQ(st.by_pattern.size(), 10u);
    const nlohmann::json j = st;
    EXPECT_EQ(j.get<CorpusStats>(), st);
    CorpusScan scan;
    const auto r = build_report(scan, {});
    EXPECT_EQ(parse_report(nlohmann::json::parse(emit_json(r))), r);
    EXPECT_FALSE(emit_summary(r).empty());
    EXPECT_EQ(nlohmann::json::parse(emit_interchange(r))["runs"][0]["results"].size(), 0u);
}

TEST(Report, ListingsStatsMatchGoldenFile) {
    std::ifstream in(skillscan::testing::fixtures_dir() / "golden" / "listings_stats.json");
    ASSERT_TRUE(in);
    const auto golden = nlohmann::json::parse(in);
    const nlohmann::json actual = listings_report().stats;
    EXPECT_EQ(actual, golden) << actual.dump(2);
}

TEST(Report, ListingsHeadlineNumbers) {
    const auto st = listings_report().stats;
    EXPECT_EQ(st.totals.skills_scanned, 6u);
    EXPECT_EQ(st.totals.skills_flagged, 6u);
    EXPECT_EQ(st.totals.skills_affected, 6u);
    EXPECT_EQ(st.totals.issue_count, 15u);
    EXPECT_EQ(st.totals.vulnerable_skills, 2u);
    EXPECT_EQ(st.totals.malicious_skills, 4u);
    EXPECT_EQ(st.family_issue_count.at("vulnerability"), 2u);
    EXPECT_EQ(st.family_issue_count.at("malicious"), 13u);
    EXPECT_DOUBLE_EQ(st.mean_issues_per_skill, 15.0 / 6.0);
    EXPECT_DOUBLE_EQ(st.median_issues_per_skill, 1.5);
}

TEST(Report, IssuesSortedAndSkillsOrdered) {
    const auto r = listings_report();
    EXPECT_TRUE(std::is_sorted(r.issues.begin(), r.issues.end(), issue_less));
    for (std::size_t i = 1; i < r.skills.size(); ++i) EXPECT_LT(r.skills[i - 1].skill_id, r.skills[i].skill_id);
    for (const auto& s : r.skills) EXPECT_TRUE(s.issues.empty());
}

TEST(Report, DeterministicBytes) {
    EXPECT_EQ(emit_json(listings_report()), emit_json(listings_report()));
    EXPECT_EQ(emit_interchange(listings_report()), emit_interchange(listings_report()));
}

TEST(Report, JsonRoundTrip) {
    const auto r = listings_report();
    EXPECT_EQ(parse_report(nlohmann::json::parse(emit_json(r))), r);
    TempDir dir;
    const auto p = dir.write("r.json", emit_json(r));
    EXPECT_EQ(load_report(p), r);
}

TEST(Report, SchemaVersionAndMalformed) {
    auto j = nlohmann::json::parse(emit_json(listings_report()));
    j["schema_version"] = kSchemaVersion + 1;
    EXPECT_THROW(parse_report(j), InputError);
    EXPECT_THROW(parse_report(nlohmann::json::array()), InputError);
    EXPECT_THROW(load_report("/nonexistent/report.json"), IoError);
}

TEST(Report, ParseFormat) {
    EXPECT_EQ(parse_format("json"), ReportFormat::Json);
    EXPECT_EQ(parse_format("summary"), ReportFormat::Summary);
    EXPECT_EQ(parse_format("interchange"), ReportFormat::Interchange);
    EXPECT_EQ(parse_format("sarif"), ReportFormat::Interchange);
    EXPECT_THROW(parse_format("xml"), ArgumentError);
}

TEST(Interchange, ListingThreeIsOneWarningAtLineOne) {
    const auto snap = load_corpus(skillscan::testing::fixtures_dir() / "listings");
    CorpusSnapshot only;
    for (const auto& b : snap.bundles) {
        if (b.skill_id == "listing3") only.bundles.push_back(b);
    }
    only.population_size = 1;
    const auto r = build_report(scan_corpus_serial(only, Scanner()), {});
    const auto sarif = nlohmann::json::parse(emit_interchange(r));
    EXPECT_EQ(sarif["version"], "2.1.0");
    const auto& results = sarif["runs"][0]["results"];
    ASSERT_EQ(results.size(), 1u);
    EXPECT_EQ(results[0]["level"], "warning");
    EXPECT_EQ(results[0]["ruleId"], "info-exposure-logging");
    const auto& loc = results[0]["locations"][0]["physicalLocation"];
    EXPECT_EQ(loc["artifactLocation"]["uri"], "listing3/index.js");
    EXPECT_EQ(loc["region"]["startLine"], 1);
}

TEST(Interchange, LevelsFollowSeverityThenFamily) {
    auto net = issue("a", LeakagePattern::DataExfiltration, LeakChannel::Network, 0);
    net.severity = 1;
    auto log = issue("a", LeakagePattern::DataExfiltration, LeakChannel::Stdout, 1);
    log.severity = 2;
    auto file = issue("a", LeakagePattern::ArtifactLeakage, LeakChannel::File, 2);
    file.severity = 3;
    auto mal = issue("a", LeakagePattern::RemoteExploitation, LeakChannel::Network, 3);
    auto vul = issue("a", LeakagePattern::HardcodedCredentials, LeakChannel::File, 4);
    CorpusScan scan;
    auto s = skill("a", Verdict::Malicious);
    s.issues = {net, log, file, mal, vul};
    scan.skills = {s};
    const auto sarif = nlohmann::json::parse(emit_interchange(build_report(scan, {})));
    std::vector<std::string> levels;
    for (const auto& res : sarif["runs"][0]["results"]) levels.push_back(res["level"]);
    EXPECT_EQ(levels, (std::vector<std::string>{"error", "warning", "note", "error", "warning"}));
}

TEST(Summary, MentionsEveryIssueLocation) {
    const auto r = listings_report();
    const auto text = emit_summary(r);
    for (const auto& i : r.issues) {
        if (!i.region) continue;
        const auto loc = i.file + ":" + std::to_string(i.region->start_line);
        EXPECT_NE(text.find(loc), std::string::npos) << loc;
    }
}
