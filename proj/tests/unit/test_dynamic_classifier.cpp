#include <random>
#include <set>

#include <gtest/gtest.h>

#include "skillscan/dynamic_classifier.hpp"
#include "skillscan/text.hpp"
#include "test_util.hpp"

using namespace skillscan;
using skillscan::testing::TempDir;

namespace {

TraceEvent event(Condition c, int round, TraceChannel ch, std::string payload) {
    TraceEvent e;
    e.condition = c;
    e.round = round;
    e.channel = ch;
    e.payload = std::move(payload);
    return e;
}

HitMap hits_in(const std::vector<int>& benign, const std::vector<int>& adversarial) {
    HitMap h;
    for (int r : benign) h[{Condition::Benign, r}].push_back({0, "M", TraceChannel::Stdout, false});
    for (int r : adversarial) h[{Condition::Adversarial, r}].push_back({0, "M", TraceChannel::Stdout, false});
    return h;
}

}  // namespace

TEST(MockCredentials, ChannelsAndShapes) {
    const auto creds = generate_mock_credentials("abc", {}, 1);
    std::map<CredentialChannel, int> per;
    for (const auto& c : creds) ++per[c.channel];
    EXPECT_GE(creds.size(), 2u);
    EXPECT_GE(per[CredentialChannel::EnvVar], 1);
    EXPECT_GE(per[CredentialChannel::ConfigFile], 1);
    EXPECT_EQ(per[CredentialChannel::RuntimeArg], 0);
    bool aws = false, openai = false;
    for (const auto& c : creds) {
        EXPECT_EQ(c.skill_id, "abc");
        EXPECT_EQ(c.marker.size(), kMarkerLength);
        std::size_t count = 0;
        for (auto p = c.value.find(c.marker); p != std::string::npos; p = c.value.find(c.marker, p + 1)) ++count;
        EXPECT_EQ(count, 1u) << c.name;
        if (c.name == "AWS_ACCESS_KEY_ID") aws = c.value.rfind("AKIA", 0) == 0;
        if (c.name == "OPENAI_API_KEY") openai = c.value.rfind("sk-", 0) == 0;
    }
    EXPECT_TRUE(aws);
    EXPECT_TRUE(openai);
}

TEST(MockCredentials, RuntimeArgsDeterminismAndDistinctMarkers) {
    const auto a = generate_mock_credentials("skill-x", {"api_token", "db_password"}, 9);
    const auto b = generate_mock_credentials("skill-x", {"api_token", "db_password"}, 9);
    EXPECT_EQ(a, b);
    int runtime = 0;
    std::set<std::string> markers;
    for (const auto& c : a) {
        if (c.channel == CredentialChannel::RuntimeArg) ++runtime;
        markers.insert(c.marker);
    }
    EXPECT_EQ(runtime, 2);
    EXPECT_EQ(markers.size(), a.size());
    EXPECT_NE(generate_mock_credentials("skill-x", {}, 10)[0].marker, a[0].marker);
}

TEST(MockCredentials, EnvFileRendersConfigCredentials) {
    const auto creds = generate_mock_credentials("abc", {}, 1);
    const auto env = render_env_file(creds);
    for (const auto& c : creds) {
        const bool present = env.find(c.name + "=" + c.value + "\n") != std::string::npos;
        EXPECT_EQ(present, c.channel == CredentialChannel::ConfigFile) << c.name;
    }
}

TEST(DetectMarkers, DirectHitRecordedPerRound) {
    const auto creds = generate_mock_credentials("s", {}, 2);
    const auto& m = creds[0].marker;
    const std::vector<TraceEvent> trace = {
        event(Condition::Benign, 1, TraceChannel::Stdout, "nothing here"),
        event(Condition::Benign, 2, TraceChannel::Stdout, "leaked " + creds[0].value),
    };
    const auto hits = detect_markers(trace, creds);
    ASSERT_EQ(hits.size(), 1u);
    const auto& h = hits.at({Condition::Benign, 2});
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h[0].marker, m);
    EXPECT_EQ(h[0].event_index, 1u);
    EXPECT_FALSE(h[0].via_base64);
}

TEST(DetectMarkers, Base64WrappedHit) {
    const auto creds = generate_mock_credentials("s", {}, 2);
    for (std::size_t pad = 0; pad < 3; ++pad) {
        const std::string body = std::string(pad, 'x') + "-----BEGIN-----\n" + creds[1].value + "\n";
        auto ev = event(Condition::Adversarial, 3, TraceChannel::NetworkEgress, "key=" + base64::encode(body) + "&x=1");
        const auto hits = detect_markers({ev}, creds);
        ASSERT_EQ(hits.count({Condition::Adversarial, 3}), 1u) << pad;
        const auto& h = hits.at({Condition::Adversarial, 3});
        ASSERT_EQ(h.size(), 1u);
        EXPECT_TRUE(h[0].via_base64);
        EXPECT_EQ(h[0].marker, creds[1].marker);
    }
}

TEST(DetectMarkers, BinaryPayloadSearchedBytewise) {
    const auto creds = generate_mock_credentials("s", {}, 2);
    auto ev = event(Condition::Benign, 1, TraceChannel::NetworkEgress,
                    std::string("\x00\x01\xff", 3) + creds[0].marker + std::string("\x00", 1));
    ev.binary = true;
    EXPECT_EQ(detect_markers({ev}, creds).size(), 1u);
}

TEST(DetectMarkers, NoMarkersNoHits) {
    const auto creds = generate_mock_credentials("s", {}, 2);
    EXPECT_TRUE(detect_markers({event(Condition::Benign, 1, TraceChannel::Stdout, "ok")}, creds).empty());
    EXPECT_TRUE(detect_markers({}, creds).empty());
}

TEST(AggregateProfile, Examples) {
    auto p = aggregate_profile(hits_in({1, 3}, {}));
    EXPECT_EQ(p.b_count, 2);
    EXPECT_EQ(p.a_count, 0);
    p = aggregate_profile(hits_in({2}, {1, 2}));
    EXPECT_EQ(p.b_count, 1);
    EXPECT_EQ(p.a_count, 2);
    p = aggregate_profile({});
    EXPECT_EQ(p.b_count, 0);
    EXPECT_EQ(p.a_count, 0);
}

TEST(AggregateProfile, MultipleHitsInOneRoundCountOnce) {
    auto h = hits_in({1}, {});
    h[{Condition::Benign, 1}].push_back({1, "N", TraceChannel::FileWrite, false});
    EXPECT_EQ(aggregate_profile(h).b_count, 1);
}

TEST(AggregateProfile, RoundOutOfRange) {
    EXPECT_THROW(aggregate_profile(hits_in({4}, {})), InputError);
    EXPECT_THROW(aggregate_profile({}, "s", {{Condition::Benign, 0}}), InputError);
}

TEST(AggregateProfile, TimedOutRoundsAreRecorded) {
    const auto p = aggregate_profile(hits_in({1}, {}), "s", {{Condition::Benign, 2}});
    ASSERT_EQ(p.timed_out.size(), 1u);
    EXPECT_EQ(p.timed_out[0].round, 2);
    EXPECT_EQ(p.b_count, 1);
}

TEST(Retention, Examples) {
    const auto prof = [](int b, int a) {
        ExecutionProfile p;
        p.b_count = b;
        p.a_count = a;
        return p;
    };
    EXPECT_TRUE(retain_dynamic(prof(2, 0)));
    EXPECT_FALSE(retain_dynamic(prof(1, 0)));
    EXPECT_TRUE(retain_dynamic(prof(0, 1)));
}

TEST(ClassifyProfile, Examples) {
    EXPECT_EQ(classify_profile(1, 2), ProfileClass::AttackInduced);
    EXPECT_EQ(classify_profile(3, 1), ProfileClass::DualTriggered);
    EXPECT_EQ(classify_profile(3, 0), ProfileClass::BaselineOnly);
    EXPECT_EQ(classify_profile(0, 0), ProfileClass::BelowThreshold);
}

TEST(ClassifyProfile, PartitionOverAllSixteenProfiles) {
    for (int b = 0; b <= 3; ++b) {
        for (int a = 0; a <= 3; ++a) {
            const bool attack = b <= 1 && a >= 1;
            const bool dual = b >= 2 && a >= 1;
            const bool baseline = b >= 2 && a == 0;
            const bool below = b <= 1 && a == 0;
            EXPECT_EQ(attack + dual + baseline + below, 1);
            ProfileClass expected = attack ? ProfileClass::AttackInduced
                                    : dual ? ProfileClass::DualTriggered
                                    : baseline ? ProfileClass::BaselineOnly
                                               : ProfileClass::BelowThreshold;
            ExecutionProfile p;
            p.b_count = b;
            p.a_count = a;
            EXPECT_EQ(classify_profile(p), expected) << b << "," << a;
            EXPECT_EQ(retain_dynamic(p), b >= 2 || a >= 1) << b << "," << a;
            EXPECT_EQ(retain_dynamic(p), expected != ProfileClass::BelowThreshold);
        }
    }
}

TEST(RouteVerdict, FullTable) {
    using P = ProfileClass;
    using I = Intent;
    using V = Verdict;
    EXPECT_EQ(route_verdict(P::AttackInduced, std::nullopt).verdict, V::Vulnerable);
    EXPECT_EQ(route_verdict(P::DualTriggered, std::nullopt).verdict, V::NeedsReview);
    EXPECT_EQ(route_verdict(P::DualTriggered, I::Undeclared).verdict, V::Vulnerable);
    EXPECT_EQ(route_verdict(P::DualTriggered, I::Deliberate).verdict, V::Malicious);
    EXPECT_THROW(route_verdict(P::DualTriggered, I::Declared), InputError);
    EXPECT_EQ(route_verdict(P::BaselineOnly, std::nullopt).verdict, V::NeedsReview);
    EXPECT_EQ(route_verdict(P::BaselineOnly, I::Declared).verdict, V::Benign);
    EXPECT_EQ(route_verdict(P::BaselineOnly, I::Undeclared).verdict, V::Vulnerable);
    EXPECT_EQ(route_verdict(P::BaselineOnly, I::Deliberate).verdict, V::Malicious);
    EXPECT_EQ(route_verdict(P::BelowThreshold, std::nullopt).verdict, V::Benign);

    const auto ignored = route_verdict(P::AttackInduced, I::Deliberate);
    EXPECT_EQ(ignored.verdict, V::Vulnerable);
    EXPECT_TRUE(ignored.warning.has_value());
    const auto below = route_verdict(P::BelowThreshold, I::Deliberate);
    EXPECT_EQ(below.verdict, V::Benign);
    EXPECT_TRUE(below.warning.has_value());
    EXPECT_FALSE(route_verdict(P::AttackInduced, std::nullopt).warning.has_value());
}

TEST(ParseIntent, Spellings) {
    EXPECT_EQ(parse_intent("declared"), Intent::Declared);
    EXPECT_EQ(parse_intent("undeclared"), Intent::Undeclared);
    EXPECT_EQ(parse_intent("deliberate"), Intent::Deliberate);
    EXPECT_THROW(parse_intent("maybe"), ArgumentError);
}

TEST(CohensKappa, IdenticalIsOne) {
    EXPECT_EQ(cohens_kappa({"V", "M", "B", "V"}, {"V", "M", "B", "V"}), 1.0);
    EXPECT_EQ(cohens_kappa({"V", "V"}, {"V", "V"}), 1.0);
}

TEST(CohensKappa, HandExpandedContingencyTable) {
    // Rows a, columns b over {V, M, B}:
    //      V  M  B
    //   V  1  1  0
    //   M  0  1  0
    //   B  0  0  1
    // p_o = 3/4; marginals a = (2,1,1)/4, b = (1,2,1)/4; p_e = (2+2+1)/16 = 5/16.
    const double po = 3.0 / 4.0, pe = 5.0 / 16.0;
    const double expected = (po - pe) / (1.0 - pe);
    EXPECT_NEAR(expected, 7.0 / 11.0, 1e-15);
    EXPECT_NEAR(cohens_kappa({"V", "V", "M", "B"}, {"V", "M", "M", "B"}), expected, 1e-9);
}

TEST(CohensKappa, IndependentLabelsNearZero) {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> alphabet = {"B", "V", "M"};
    std::vector<std::string> a, b;
    for (int i = 0; i < 20000; ++i) {
        a.push_back(alphabet[rng() % 3]);
        b.push_back(alphabet[rng() % 3]);
    }
    EXPECT_LT(std::fabs(cohens_kappa(a, b)), 0.05);
}

TEST(CohensKappa, Errors) {
    EXPECT_THROW(cohens_kappa({}, {}), InputError);
    EXPECT_THROW(cohens_kappa({"A"}, {"A", "B"}), InputError);
}

TEST(CohensKappa, DisjointLabelsHaveZeroChanceAgreement) {
    // p_o = 0 and p_e = 0 when the two raters never share a label.
    EXPECT_EQ(cohens_kappa({"A", "A"}, {"B", "B"}), 0.0);
}

TEST(CohensKappa, BoundedAndSymmetric) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> a, b;
        const int n = 2 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            a.push_back(std::string(1, static_cast<char>('A' + rng() % 3)));
            b.push_back(rng() % 2 ? a.back() : std::string(1, static_cast<char>('A' + rng() % 3)));
        }
        double k1 = 0, k2 = 0;
        try {
            k1 = cohens_kappa(a, b);
            k2 = cohens_kappa(b, a);
        } catch (const InputError&) {
            continue;
        }
        EXPECT_GE(k1, -1.0 - 1e-12);
        EXPECT_LE(k1, 1.0 + 1e-12);
        EXPECT_NEAR(k1, k2, 1e-12);
    }
}

TEST(Trace, JsonRoundTrip) {
    Trace t;
    t.skill_id = "s";
    t.credentials = generate_mock_credentials("s", {"tok"}, 4);
    t.events = {event(Condition::Benign, 1, TraceChannel::Stdout, "hello"),
                event(Condition::Adversarial, 2, TraceChannel::NetworkEgress, std::string("\x00\xfe", 2))};
    t.events[1].binary = true;
    t.events[1].metadata = {{"host", "evil.example"}};
    t.timeouts = {{Condition::Adversarial, 3}};
    EXPECT_EQ(parse_trace(trace_to_json(t)), t);
}

TEST(Trace, MalformedDocuments) {
    const auto bad = [](const char* s) { return parse_trace(nlohmann::json::parse(s)); };
    EXPECT_THROW(bad(R"({"skill_id":"s","events":[{"round":1,"condition":"weird","channel":"stdout","payload":""}]})"),
                 InputError);
    EXPECT_THROW(bad(R"({"skill_id":"s","events":[{"round":1,"condition":"benign","channel":"tty","payload":""}]})"),
                 InputError);
    EXPECT_THROW(bad(R"({"skill_id":"s","events":[{"round":0,"condition":"benign","channel":"stdout","payload":""}]})"),
                 InputError);
    EXPECT_THROW(
        bad(R"({"skill_id":"s","credentials":[{"skill_id":"t","channel":"env_var","name":"A","value":"v","marker":"m"}],"events":[]})"),
        InputError);
    EXPECT_THROW(
        bad(R"({"skill_id":"s","events":[{"round":1,"condition":"benign","channel":"stdout","payload":{"base64":"@@"}}]})"),
        InputError);
    EXPECT_THROW(bad(R"({"events":[]})"), InputError);
    EXPECT_THROW(load_trace("/nonexistent/trace.json"), IoError);
}

TEST(ClassifyTrace, EndToEnd) {
    Trace t;
    t.skill_id = "s";
    t.credentials = generate_mock_credentials("s", {}, 5);
    t.events = {event(Condition::Benign, 1, TraceChannel::Stdout, t.credentials[0].value),
                event(Condition::Benign, 3, TraceChannel::Stderr, t.credentials[0].marker),
                event(Condition::Adversarial, 2, TraceChannel::Stdout, "clean")};
    const auto c = classify_trace(t);
    EXPECT_EQ(c.profile.b_count, 2);
    EXPECT_EQ(c.profile.a_count, 0);
    EXPECT_EQ(c.profile_class, ProfileClass::BaselineOnly);
    EXPECT_TRUE(c.retained);
    EXPECT_EQ(c.verdict, Verdict::NeedsReview);
}

TEST(VerdictLedger, AppendOnlyLastWriteWins) {
    TempDir dir;
    VerdictLedger ledger(dir.path() / "ledger.jsonl");
    EXPECT_TRUE(ledger.records().empty());
    VerdictRecord r{"s", ProfileClass::DualTriggered, std::nullopt, Verdict::NeedsReview, "dynamic", "t1"};
    ledger.append(r);
    r.intent = Intent::Deliberate;
    r.verdict = Verdict::Malicious;
    r.reviewer = "alice";
    r.timestamp = "t2";
    ledger.append(r);
    VerdictRecord other{"u", ProfileClass::AttackInduced, std::nullopt, Verdict::Vulnerable, "alice", "t3"};
    ledger.append(other);
    r.verdict = Verdict::Vulnerable;
    r.intent = Intent::Undeclared;
    r.timestamp = "t4";
    ledger.append(r);

    EXPECT_EQ(ledger.records().size(), 4u);
    const auto by_reviewer = ledger.latest_by_reviewer();
    EXPECT_EQ(by_reviewer.size(), 3u);
    EXPECT_EQ(by_reviewer.at({"s", "alice"}).timestamp, "t4");
    const auto eff = ledger.effective();
    EXPECT_EQ(eff.at("s").verdict, Verdict::Vulnerable);
    EXPECT_EQ(eff.at("u").verdict, Verdict::Vulnerable);

    dir.write("bad.jsonl", "{\"skill_id\": \"s\"}\nnot json\n");
    EXPECT_THROW(VerdictLedger(dir.path() / "bad.jsonl").records(), InputError);
    EXPECT_THROW(ledger.append(VerdictRecord{}), ArgumentError);
}
