#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillscan/common.hpp"

namespace skillscan {

enum class CredentialChannel { EnvVar, ConfigFile, RuntimeArg };
enum class Condition { Benign, Adversarial };
enum class TraceChannel { NetworkEgress, FileWrite, Stdout, Stderr };
enum class ProfileClass { AttackInduced, DualTriggered, BaselineOnly, BelowThreshold };
enum class Intent { Declared, Undeclared, Deliberate };
enum class Verdict { Benign, Vulnerable, Malicious, NeedsReview };

NLOHMANN_JSON_SERIALIZE_ENUM(CredentialChannel, {{CredentialChannel::EnvVar, "env_var"},
                                                 {CredentialChannel::ConfigFile, "config_file"},
                                                 {CredentialChannel::RuntimeArg, "runtime_arg"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Condition, {{Condition::Benign, "benign"}, {Condition::Adversarial, "adversarial"}})
NLOHMANN_JSON_SERIALIZE_ENUM(TraceChannel, {{TraceChannel::NetworkEgress, "network_egress"},
                                            {TraceChannel::FileWrite, "file_write"},
                                            {TraceChannel::Stdout, "stdout"},
                                            {TraceChannel::Stderr, "stderr"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ProfileClass, {{ProfileClass::AttackInduced, "attack_induced"},
                                            {ProfileClass::DualTriggered, "dual_triggered"},
                                            {ProfileClass::BaselineOnly, "baseline_only"},
                                            {ProfileClass::BelowThreshold, "below_threshold"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Intent, {{Intent::Declared, "declared"},
                                      {Intent::Undeclared, "undeclared"},
                                      {Intent::Deliberate, "deliberate"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Verdict, {{Verdict::Benign, "benign"},
                                       {Verdict::Vulnerable, "vulnerable"},
                                       {Verdict::Malicious, "malicious"},
                                       {Verdict::NeedsReview, "needs_review"}})

std::string_view to_string(ProfileClass c);
std::string_view to_string(Verdict v);
std::string_view to_string(Intent i);
/// Parses the lowercase JSON spelling; throws ArgumentError otherwise.
Intent parse_intent(std::string_view s);

inline constexpr int kRoundsPerCondition = 3;
inline constexpr std::size_t kMarkerLength = 12;

struct MockCredential {
    std::string skill_id;
    CredentialChannel channel = CredentialChannel::EnvVar;
    std::string name;
    std::string value;
    std::string marker;

    friend bool operator==(const MockCredential&, const MockCredential&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MockCredential, skill_id, channel, name, value, marker)

/// EnvVar: OPENAI_API_KEY (`sk-proj-`) and AWS_ACCESS_KEY_ID (`AKIA`); ConfigFile: GITHUB_TOKEN
/// and DATABASE_URL; RuntimeArg: one per declared parameter. Markers are 12 uppercase
/// alphanumerics whose first four characters derive from the skill id.
std::vector<MockCredential> generate_mock_credentials(const std::string& skill_id,
                                                      const std::vector<std::string>& declared_params,
                                                      std::uint64_t seed);

/// `.env` rendering of the ConfigFile credentials.
std::string render_env_file(const std::vector<MockCredential>& creds);

struct TraceEvent {
    int round = 1;
    Condition condition = Condition::Benign;
    TraceChannel channel = TraceChannel::Stdout;
    std::string payload;  // raw bytes
    bool binary = false;  // serialized as {"base64": ...}
    nlohmann::json metadata = nlohmann::json::object();

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct RoundKey {
    Condition condition = Condition::Benign;
    int round = 1;

    friend bool operator==(const RoundKey&, const RoundKey&) = default;
    friend auto operator<=>(const RoundKey&, const RoundKey&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RoundKey, condition, round)

struct Trace {
    std::string skill_id;
    std::vector<MockCredential> credentials;
    std::vector<TraceEvent> events;
    std::vector<RoundKey> timeouts;  // rounds cut short by the harness

    friend bool operator==(const Trace&, const Trace&) = default;
};

/// Throws InputError on malformed documents (bad round/condition/channel, credentials for another skill).
Trace parse_trace(const nlohmann::json& doc);
Trace load_trace(const std::filesystem::path& path);
nlohmann::json trace_to_json(const Trace& trace);

struct MarkerHit {
    std::size_t event_index = 0;
    std::string marker;
    TraceChannel channel = TraceChannel::Stdout;
    bool via_base64 = false;

    friend bool operator==(const MarkerHit&, const MarkerHit&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MarkerHit, event_index, marker, channel, via_base64)

/// Rounds with at least one hit; absent keys mean no hits.
using HitMap = std::map<RoundKey, std::vector<MarkerHit>>;

/// Substring search for every credential marker in every payload, plus one level of base64
/// decoding over base64-looking runs.
HitMap detect_markers(const std::vector<TraceEvent>& trace, const std::vector<MockCredential>& creds);

struct ExecutionProfile {
    std::string skill_id;
    int b_count = 0;
    int a_count = 0;
    HitMap evidence;
    std::vector<RoundKey> timed_out;  // counted as completed rounds
};

/// Throws InputError for rounds outside 1..3.
ExecutionProfile aggregate_profile(const HitMap& hits, const std::string& skill_id = {},
                                   const std::vector<RoundKey>& timeouts = {});

bool retain_dynamic(const ExecutionProfile& profile);
ProfileClass classify_profile(int b_count, int a_count);
ProfileClass classify_profile(const ExecutionProfile& profile);

struct Routing {
    Verdict verdict = Verdict::NeedsReview;
    std::optional<std::string> warning;
};

/// Throws InputError for Declared on a DualTriggered profile.
Routing route_verdict(ProfileClass cls, std::optional<Intent> reviewer_intent);

/// Throws InputError on empty or unequal-length inputs, and when chance agreement is 1 but
/// the labelings differ.
double cohens_kappa(const std::vector<std::string>& labels_a, const std::vector<std::string>& labels_b);

struct TraceClassification {
    ExecutionProfile profile;
    ProfileClass profile_class = ProfileClass::BelowThreshold;
    bool retained = false;
    Verdict verdict = Verdict::Benign;
};

TraceClassification classify_trace(const Trace& trace);

struct VerdictRecord {
    std::string skill_id;
    ProfileClass profile_class = ProfileClass::BelowThreshold;
    std::optional<Intent> intent;
    Verdict verdict = Verdict::Benign;
    std::string reviewer;
    std::string timestamp;

    friend bool operator==(const VerdictRecord&, const VerdictRecord&) = default;
};

void to_json(nlohmann::json& j, const VerdictRecord& r);
void from_json(const nlohmann::json& j, VerdictRecord& r);

/// Append-only JSON-lines ledger. Later lines win per (skill, reviewer); the effective verdict
/// for a skill is its most recent line.
class VerdictLedger {
  public:
    explicit VerdictLedger(std::filesystem::path path);

    void append(const VerdictRecord& record) const;
    std::vector<VerdictRecord> records() const;
    std::map<std::pair<std::string, std::string>, VerdictRecord> latest_by_reviewer() const;
    std::map<std::string, VerdictRecord> effective() const;

    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

std::map<std::string, VerdictRecord> effective_verdicts(const std::vector<VerdictRecord>& records);

}  // namespace skillscan
