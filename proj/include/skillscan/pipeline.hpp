#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillscan/code_analyzer.hpp"
#include "skillscan/corpus.hpp"
#include "skillscan/dynamic_classifier.hpp"
#include "skillscan/nl_analyzer.hpp"
#include "skillscan/pattern_taxonomy.hpp"
#include "skillscan/taxonomy.hpp"

namespace skillscan {

/// Every rule source the scan depends on.
struct ScanConfig {
    KeywordDictionary dictionary;
    ConstraintRules rules;
    CodeConfig code;
    SignatureConfig signatures;

    static ScanConfig defaults();
    /// "dictionary", "nl_rules", "code", "signatures" -> digest.
    std::map<std::string, std::string> digests() const;
};

/// Per-skill scan outcome. Issues are already filtered by the verdict context.
struct SkillScan {
    std::string skill_id;
    std::optional<std::string> category;
    std::vector<Language> languages;                       // distinct source languages
    std::vector<CredentialCategory> credential_categories;  // distinct, over both streams
    std::size_t nl_match_count = 0;
    std::size_t code_match_count = 0;
    bool keyword_flagged = false;
    bool nl_retained = false;
    bool code_retained = false;
    std::optional<bool> dynamic_retained;
    std::optional<ProfileClass> profile_class;
    /// Keyword hit plus NL retention, code retention or at least one issue.
    bool flagged = false;
    std::optional<Verdict> verdict;
    std::string verdict_source;  // "static", "dynamic", "ledger" or empty
    std::optional<AttackSurface> surface;
    std::vector<NLFinding> nl_findings;
    std::vector<SinkFinding> sink_findings;
    std::vector<ObfuscationFinding> obfuscation_findings;
    std::vector<Diagnostic> diagnostics;
    std::vector<SkippedFile> skipped;
    std::vector<IssueRecord> issues;

    /// Vulnerable or Malicious with at least one issue.
    bool affected() const;
    friend bool operator==(const SkillScan&, const SkillScan&) = default;
};

void to_json(nlohmann::json& j, const SkillScan& s);
void from_json(const nlohmann::json& j, SkillScan& s);

/// Optional per-skill inputs beyond the bundle itself.
struct ScanInputs {
    std::map<std::string, Trace> traces;          // by skill id
    std::map<std::string, VerdictRecord> verdicts;  // effective ledger verdicts by skill id
};

/// Compiled ScanConfig; immutable and shareable across threads.
class Scanner {
  public:
    explicit Scanner(ScanConfig config = ScanConfig::defaults());

    const ScanConfig& config() const { return config_; }

    /// Verdict precedence: ledger record, then the dynamic route when a trace is given, then
    /// the static provisional verdict (Malicious if any malicious-family issue, else Vulnerable).
    SkillScan scan_bundle(const SkillBundle& bundle, const Trace* trace = nullptr,
                          const VerdictRecord* ledger_verdict = nullptr) const;

    /// Evidence collection only, before pattern assignment.
    SkillEvidence collect(const SkillBundle& bundle, const Trace* trace = nullptr) const;

  private:
    ScanConfig config_;
    ConstraintEvaluator evaluator_;
    CodeAnalyzer analyzer_;
    PatternEngine engine_;
};

struct CorpusScan {
    std::vector<SkillScan> skills;  // snapshot order
    std::string timestamp;
    std::size_t population_size = 0;

    friend bool operator==(const CorpusScan&, const CorpusScan&) = default;
};

/// Reference implementation: one skill after another.
CorpusScan scan_corpus_serial(const CorpusSnapshot& snapshot, const Scanner& scanner, const ScanInputs& inputs = {});

/// OpenMP across skills; output is identical to scan_corpus_serial. `threads` <= 0 uses the
/// OpenMP default.
CorpusScan scan_corpus_parallel(const CorpusSnapshot& snapshot, const Scanner& scanner, const ScanInputs& inputs = {},
                                int threads = 0);

}  // namespace skillscan
