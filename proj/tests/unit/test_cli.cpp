#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "skillscan/report.hpp"
#include "test_util.hpp"

using namespace skillscan;
using skillscan::testing::TempDir;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run cli(const std::string& args) {
    TempDir io;
    const auto out = io.path() / "stdout";
    const auto err = io.path() / "stderr";
    const std::string cmd = std::string("\"") + SKILLSCAN_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string fixture(const std::string& rel) { return (skillscan::testing::fixtures_dir() / rel).string(); }

}  // namespace

TEST(Cli, ScanListingsReportsIssues) {
    TempDir dir;
    const auto out = dir.path() / "report.json";
    const auto r = cli("scan " + fixture("listings") + " --out " + out.string());
    EXPECT_EQ(r.code, 1) << r.err;
    const auto report = load_report(out);
    EXPECT_EQ(report.stats.totals.skills_flagged, 6u);
    EXPECT_EQ(report.snapshot_timestamp, "2026-01-15T00:00:00Z");

    const auto rendered = cli("report " + out.string() + " --format summary");
    EXPECT_EQ(rendered.code, 1);
    EXPECT_NE(rendered.out.find("listing3"), std::string::npos);
    const auto sarif = cli("report " + out.string() + " --format sarif");
    EXPECT_EQ(nlohmann::json::parse(sarif.out)["version"], "2.1.0");
}

TEST(Cli, SerialAndParallelOutputsAreIdentical) {
    const auto a = cli("scan " + fixture("listings") + " --serial");
    const auto b = cli("scan " + fixture("listings") + " --threads 4");
    EXPECT_EQ(a.code, 1);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, CleanCorpusExitsZero) {
    TempDir dir;
    dir.write("hello/SKILL.md", "# Hello\nSays hello world.\n");
    dir.write("hello/main.py", "print('hello world')\n");
    const auto r = cli("scan " + dir.path().string() + " --format summary");
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, BrokenFileIsContained) {
    const auto r = cli("scan " + fixture("broken") + " --format json");
    EXPECT_EQ(r.code, 1) << r.err;
    const auto report = parse_report(nlohmann::json::parse(r.out));
    EXPECT_EQ(report.issues.size(), 2u);
    ASSERT_EQ(report.skills.size(), 1u);
    ASSERT_EQ(report.skills[0].diagnostics.size(), 1u);
    EXPECT_EQ(report.skills[0].diagnostics[0].file, "broken.py");
}

TEST(Cli, ErrorsExitTwo) {
    EXPECT_EQ(cli("scan /nonexistent/corpus").code, 2);
    EXPECT_EQ(cli("scan " + fixture("listings") + " --format xml").code, 2);
    EXPECT_EQ(cli("bogus-subcommand").code, 2);
    EXPECT_EQ(cli("").code, 2);
    TempDir dir;
    dir.write("bad.json", "{\"entries\": [{\"pattern\": \"(\"}]}");
    EXPECT_EQ(cli("scan " + fixture("listings") + " --dict " + (dir.path() / "bad.json").string()).code, 2);
    EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, ConfigFromEnvironment) {
    TempDir dir;
    const auto dict = dir.write("dict.json", "{\"replace\": true, \"entries\": []}");
    const std::string env = "SKILLSCAN_DICT=\"" + dict.string() + "\" ";
    const std::string cmd = env + "\"" + SKILLSCAN_CLI + "\" scan " + fixture("listings") + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    // With no keywords at all nothing is flagged, so the scan is clean.
    EXPECT_EQ(WEXITSTATUS(status), 0);
}

TEST(Cli, TraceClassificationAndVerdictLedger) {
    TempDir dir;
    Trace t;
    t.skill_id = "listing3";
    t.credentials = generate_mock_credentials("listing3", {}, 3);
    TraceEvent e;
    e.condition = Condition::Benign;
    e.channel = TraceChannel::Stdout;
    e.payload = t.credentials[0].value;
    for (int round : {1, 2}) {
        e.round = round;
        t.events.push_back(e);
    }
    const auto trace = dir.write("t.json", trace_to_json(t).dump());
    const auto ledger = (dir.path() / "ledger.jsonl").string();

    const auto c = cli("classify-trace " + trace.string() + " --ledger " + ledger);
    EXPECT_EQ(c.code, 1) << c.err;
    const auto j = nlohmann::json::parse(c.out);
    EXPECT_EQ(j["profile_class"], "baseline_only");
    EXPECT_EQ(j["verdict"], "needs_review");

    const auto v = cli("verdict listing3 --intent declared --reviewer alice --ledger " + ledger);
    EXPECT_EQ(v.code, 0) << v.err;
    EXPECT_EQ(nlohmann::json::parse(v.out)["verdict"], "benign");
    EXPECT_EQ(VerdictLedger(ledger).effective().at("listing3").verdict, Verdict::Benign);
    EXPECT_EQ(cli("verdict other --intent declared --reviewer alice --ledger " + ledger).code, 2);

    const auto s = cli("scan " + fixture("listings") + " --ledger " + ledger);
    const auto report = parse_report(nlohmann::json::parse(s.out));
    for (const auto& i : report.issues) EXPECT_NE(i.skill_id, "listing3");
    for (const auto& sk : report.skills) {
        if (sk.skill_id == "listing3") EXPECT_EQ(sk.verdict_source, "ledger");
    }
}

TEST(Cli, SampleKappaAndMock) {
    const auto s = cli("sample --population 170226 --confidence 0.99 --margin 0.01");
    EXPECT_EQ(s.code, 0);
    EXPECT_NE(s.out.find("15115"), std::string::npos) << s.out;

    TempDir dir;
    const auto a = dir.write("a.json", R"(["V","V","M","B"])");
    const auto b = dir.write("b.json", R"(["V","M","M","B"])");
    const auto k = cli("kappa " + a.string() + " " + b.string());
    EXPECT_EQ(k.code, 0);
    EXPECT_NEAR(std::stod(k.out), 7.0 / 11.0, 1e-6);
    const auto c = dir.write("c.json", R"({"x":"V","y":"M"})");
    const auto d = dir.write("d.json", R"({"x":"V","z":"M"})");
    EXPECT_EQ(cli("kappa " + c.string() + " " + d.string()).code, 2);

    const auto env = dir.path() / "mock.env";
    const auto m = cli("mock demo --param api_token --seed 5 --env-file " + env.string());
    EXPECT_EQ(m.code, 0);
    const auto creds = nlohmann::json::parse(m.out).get<std::vector<MockCredential>>();
    EXPECT_EQ(creds, generate_mock_credentials("demo", {"api_token"}, 5));
    EXPECT_EQ(slurp(env), render_env_file(creds));
}
