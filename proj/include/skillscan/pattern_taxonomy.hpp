#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillscan/code_analyzer.hpp"
#include "skillscan/dynamic_classifier.hpp"
#include "skillscan/nl_analyzer.hpp"

namespace skillscan {

enum class PatternFamily { Vulnerability, Malicious };

enum class LeakagePattern {
    HardcodedCredentials,
    InsecureStorage,
    InformationExposure,
    ArtifactLeakage,
    RemoteExploitation,
    CredentialCompromise,
    DataExfiltration,
    DefenseEvasion,
    Persistence,
    ResourceHijacking,
};

inline constexpr std::array<LeakagePattern, 10> kAllPatterns = {
    LeakagePattern::HardcodedCredentials, LeakagePattern::InsecureStorage,    LeakagePattern::InformationExposure,
    LeakagePattern::ArtifactLeakage,      LeakagePattern::RemoteExploitation, LeakagePattern::CredentialCompromise,
    LeakagePattern::DataExfiltration,     LeakagePattern::DefenseEvasion,     LeakagePattern::Persistence,
    LeakagePattern::ResourceHijacking};

NLOHMANN_JSON_SERIALIZE_ENUM(PatternFamily, {{PatternFamily::Vulnerability, "vulnerability"},
                                             {PatternFamily::Malicious, "malicious"}})

NLOHMANN_JSON_SERIALIZE_ENUM(LeakagePattern, {{LeakagePattern::HardcodedCredentials, "hardcoded_credentials"},
                                              {LeakagePattern::InsecureStorage, "insecure_storage"},
                                              {LeakagePattern::InformationExposure, "information_exposure"},
                                              {LeakagePattern::ArtifactLeakage, "artifact_leakage"},
                                              {LeakagePattern::RemoteExploitation, "remote_exploitation"},
                                              {LeakagePattern::CredentialCompromise, "credential_compromise"},
                                              {LeakagePattern::DataExfiltration, "data_exfiltration"},
                                              {LeakagePattern::DefenseEvasion, "defense_evasion"},
                                              {LeakagePattern::Persistence, "persistence"},
                                              {LeakagePattern::ResourceHijacking, "resource_hijacking"}})

PatternFamily family_of(LeakagePattern pattern);
std::string_view to_string(LeakagePattern pattern);
std::string_view to_string(PatternFamily family);

enum class LeakChannel { Stdout, File, Network };

NLOHMANN_JSON_SERIALIZE_ENUM(LeakChannel, {{LeakChannel::Stdout, "stdout"},
                                           {LeakChannel::File, "file"},
                                           {LeakChannel::Network, "network"}})

std::string_view to_string(LeakChannel channel);
/// Network > Stdout > File.
int channel_priority(LeakChannel channel);

enum class LifecyclePhase { Install, Load, Configure, Execute, Persist };

NLOHMANN_JSON_SERIALIZE_ENUM(LifecyclePhase, {{LifecyclePhase::Install, "install"},
                                              {LifecyclePhase::Load, "load"},
                                              {LifecyclePhase::Configure, "configure"},
                                              {LifecyclePhase::Execute, "execute"},
                                              {LifecyclePhase::Persist, "persist"}})

enum class AttackSurface { CodeAndNL, CodeOnly, NLOnly };

NLOHMANN_JSON_SERIALIZE_ENUM(AttackSurface, {{AttackSurface::CodeAndNL, "code_and_nl"},
                                             {AttackSurface::CodeOnly, "code_only"},
                                             {AttackSurface::NLOnly, "nl_only"}})

std::string_view to_string(AttackSurface surface);

enum class EvidenceKind { SinkFinding, ObfuscationFinding, NLFinding, Signature, HardcodedLiteral, CallArgument, TraceEvent };

NLOHMANN_JSON_SERIALIZE_ENUM(EvidenceKind, {{EvidenceKind::SinkFinding, "sink_finding"},
                                            {EvidenceKind::ObfuscationFinding, "obfuscation_finding"},
                                            {EvidenceKind::NLFinding, "nl_finding"},
                                            {EvidenceKind::Signature, "signature"},
                                            {EvidenceKind::HardcodedLiteral, "hardcoded_literal"},
                                            {EvidenceKind::CallArgument, "call_argument"},
                                            {EvidenceKind::TraceEvent, "trace_event"}})

/// A reference into the finding/trace stores. Trace evidence uses file "trace:<destination>".
struct EvidenceItem {
    EvidenceKind kind = EvidenceKind::Signature;
    Stream stream = Stream::Code;
    LeakChannel channel = LeakChannel::File;
    std::string file;
    Span span;
    std::string detail;
    std::optional<SinkCategory> sink;
    std::optional<std::size_t> event_index;

    friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

void to_json(nlohmann::json& j, const EvidenceItem& e);
void from_json(const nlohmann::json& j, EvidenceItem& e);

/// 1-based line/column range of an issue in its file; absent for trace-derived issues.
struct SourceRegion {
    std::size_t start_line = 1;
    std::size_t start_column = 1;
    std::size_t end_line = 1;
    std::size_t end_column = 1;

    friend bool operator==(const SourceRegion&, const SourceRegion&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SourceRegion, start_line, start_column, end_line, end_column)

SourceRegion region_of(std::string_view text, Span span);

struct IssueRecord {
    std::string skill_id;
    LeakagePattern pattern = LeakagePattern::HardcodedCredentials;
    std::string rule;
    LeakChannel channel = LeakChannel::File;
    std::vector<LeakChannel> secondary_channels;
    std::string file;
    Span span;
    std::vector<EvidenceItem> evidence;
    std::optional<int> severity;  // SinkCategory rank for sink-derived issues
    std::optional<LifecyclePhase> lifecycle_phase;
    std::optional<SourceRegion> region;

    PatternFamily family() const { return family_of(pattern); }
    friend bool operator==(const IssueRecord&, const IssueRecord&) = default;
};

void to_json(nlohmann::json& j, const IssueRecord& r);
void from_json(const nlohmann::json& j, IssueRecord& r);

/// Skill, file, offset, then pattern and rule.
bool issue_less(const IssueRecord& a, const IssueRecord& b);

struct ChannelAssignment {
    LeakChannel primary = LeakChannel::File;
    std::vector<LeakChannel> secondary;  // distinct, by descending priority
};

/// Highest-priority channel among the evidence; the rest become secondary.
/// Throws ArgumentError on empty evidence.
ChannelAssignment classify_channel(const std::vector<EvidenceItem>& evidence);

/// One row of the rule table: the leakage-channel phrases a rule covers.
struct PatternRule {
    std::string id;
    LeakagePattern pattern = LeakagePattern::HardcodedCredentials;
    std::vector<std::string> channel_phrases;
    std::string summary;
};

const std::vector<PatternRule>& rule_table();
const PatternRule& rule_by_id(std::string_view id);

/// Signature families and host/callee lists used by the rules.
/// JSON: {"replace"?: bool, "signatures"?: {family: [regex...]}, "exfil_hosts"?: [...],
///        "artifact_paths"?: [...], "process_sinks"?: [...], "response_sinks"?: [...],
///        "beacon_min_events"?: int}
/// Lists extend the base unless "replace" is true. Regexes are case-insensitive.
struct SignatureConfig {
    std::map<std::string, std::vector<std::string>> signatures;
    std::vector<std::string> exfil_hosts;
    std::vector<std::string> artifact_paths;
    std::vector<std::string> process_sinks;
    std::vector<std::string> response_sinks;
    /// Egress events to one undeclared IP literal needed to call it a beacon. Provisional.
    int beacon_min_events = 2;

    static const std::vector<std::string>& families();
    static SignatureConfig defaults();
    static SignatureConfig from_json(const nlohmann::json& doc, const SignatureConfig& base);
    static SignatureConfig load(const std::filesystem::path& path, const SignatureConfig& base);
    nlohmann::json to_json() const;
    std::string digest() const;
};

/// Everything collected for one skill before pattern assignment.
struct SkillEvidence {
    std::string skill_id;
    std::vector<NLDocument> nl_documents;
    std::vector<CredentialMatch> nl_matches;
    std::vector<NLFinding> nl_findings;
    std::vector<FileAnalysis> files;
    std::optional<Trace> trace;
    HitMap hits;
};

/// Whether `host` (or, for names, its registrable label) is mentioned in the NL documents.
bool host_declared(std::string_view host, const std::vector<NLDocument>& docs);

/// Compiled SignatureConfig; immutable and shareable across threads.
class PatternEngine {
  public:
    explicit PatternEngine(SignatureConfig config = SignatureConfig::defaults(),
                           std::vector<std::string> placeholder_patterns = CodeConfig::defaults().placeholder_patterns);

    const SignatureConfig& config() const;

    /// Deterministic, deduplicated on (skill, pattern, file, span), sorted with issue_less.
    std::vector<IssueRecord> assign(const SkillEvidence& evidence) const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

std::vector<IssueRecord> assign_patterns(const SkillEvidence& evidence, const PatternEngine& engine);

/// Union keyed on (skill, pattern, file, span); evidence of duplicates is merged and channels recomputed.
std::vector<IssueRecord> merge_issues(const std::vector<IssueRecord>& a, const std::vector<IssueRecord>& b);

/// Benign admits nothing; Vulnerable admits the vulnerability family; Malicious and
/// NeedsReview admit both families.
bool pattern_allowed(LeakagePattern pattern, Verdict verdict);
std::vector<IssueRecord> apply_verdict_context(const std::vector<IssueRecord>& issues, Verdict verdict);

/// Counts code-stream and NL-stream evidence (findings plus issue evidence); nullopt when both are zero.
std::optional<AttackSurface> classify_attack_surface(const SkillEvidence& evidence,
                                                     const std::vector<IssueRecord>& issues);

}  // namespace skillscan
