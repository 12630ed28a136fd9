#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillscan/corpus.hpp"
#include "skillscan/taxonomy.hpp"

namespace skillscan {

enum class Constraint { CredentialActionCooccurrence, PromptInjection, SocialEngineering };

NLOHMANN_JSON_SERIALIZE_ENUM(Constraint, {{Constraint::CredentialActionCooccurrence, "credential_action_cooccurrence"},
                                          {Constraint::PromptInjection, "prompt_injection"},
                                          {Constraint::SocialEngineering, "social_engineering"}})

/// Rule sets for the three window constraints. Every entry is a regex source; literal spaces
/// outside character classes match any run of whitespace.
struct ConstraintRules {
    std::vector<std::string> credential_terms;
    std::vector<std::string> action_verbs;  // plain words; inflections are generated
    std::vector<std::string> injection_phrases;
    std::vector<std::string> social_engineering_phrases;

    static ConstraintRules defaults(const KeywordDictionary& dict);

    /// Appends entries not already present.
    void merge(const ConstraintRules& other);

    /// Throws ArgumentError if the term and verb sets overlap or a pattern does not compile.
    void validate() const;

    /// Lists present in `doc` extend `base`.
    static ConstraintRules from_json(const nlohmann::json& doc, const ConstraintRules& base);
    static ConstraintRules load(const std::filesystem::path& path, const ConstraintRules& base);
    nlohmann::json to_json() const;
    std::string digest() const;
};

struct SemanticWindow {
    std::string doc_path;
    std::vector<std::size_t> sentence_indices;  // contiguous
    Span span;                                  // doc offsets from first to last sentence
    std::string text;
    CredentialMatch anchor_match;

    friend bool operator==(const SemanticWindow&, const SemanticWindow&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SemanticWindow, doc_path, sentence_indices, span, text, anchor_match)

struct ConstraintEvidence {
    Constraint constraint = Constraint::CredentialActionCooccurrence;
    std::string phrase;
    Span span;  // doc offsets

    friend bool operator==(const ConstraintEvidence&, const ConstraintEvidence&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ConstraintEvidence, constraint, phrase, span)

struct NLFinding {
    SemanticWindow window;
    std::vector<Constraint> triggered_constraints;  // non-empty, sorted, unique
    std::vector<ConstraintEvidence> evidence;

    bool triggered(Constraint c) const;
    friend bool operator==(const NLFinding&, const NLFinding&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(NLFinding, window, triggered_constraints, evidence)

/// One window per match: the containing sentence plus its neighbours, clipped at the edges.
/// Throws ArgumentError for code-stream matches and ConsistencyError for a match outside
/// every sentence.
std::vector<SemanticWindow> build_windows(const NLDocument& doc, const std::vector<CredentialMatch>& matches);

/// Compiled form of ConstraintRules; immutable and shareable across threads.
class ConstraintEvaluator {
  public:
    explicit ConstraintEvaluator(const ConstraintRules& rules);

    std::optional<NLFinding> evaluate(const SemanticWindow& window) const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

std::optional<NLFinding> evaluate_constraints(const SemanticWindow& window, const ConstraintRules& rules);

/// Windows and findings for every NL document of `bundle` given its NL-stream matches.
std::vector<NLFinding> analyze_nl(const SkillBundle& bundle, const std::vector<CredentialMatch>& nl_matches,
                                  const ConstraintEvaluator& evaluator);

bool retain_skill_nl(const SkillBundle& bundle, const std::vector<NLFinding>& findings);

/// Replaces spaces outside bracket expressions with `\s+`.
std::string flexible_whitespace(std::string_view pattern);

}  // namespace skillscan
