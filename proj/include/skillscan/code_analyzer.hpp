#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillscan/corpus.hpp"
#include "skillscan/taxonomy.hpp"

namespace skillscan {

enum class MaskReason { LineComment, BlockComment, Docstring, FencedBlock, PlaceholderExample, NonScriptMarkup };

NLOHMANN_JSON_SERIALIZE_ENUM(MaskReason, {{MaskReason::LineComment, "line_comment"},
                                          {MaskReason::BlockComment, "block_comment"},
                                          {MaskReason::Docstring, "docstring"},
                                          {MaskReason::FencedBlock, "fenced_block"},
                                          {MaskReason::PlaceholderExample, "placeholder_example"},
                                          {MaskReason::NonScriptMarkup, "non_script_markup"}})

struct MaskedRegion {
    Span span;
    MaskReason reason = MaskReason::LineComment;

    friend bool operator==(const MaskedRegion&, const MaskedRegion&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MaskedRegion, span, reason)

/// Source text with non-executable regions blanked. Masked bytes become spaces except line
/// breaks, which are kept so line numbers survive; every other offset is unchanged.
struct ExecutableView {
    std::string file;
    Language language = Language::Other;
    bool markup_container = false;
    std::string original;
    std::string masked_text;
    std::vector<MaskedRegion> masked_regions;  // sorted, non-overlapping
    std::vector<Span> string_literals;         // sorted; includes prefix and quotes

    bool is_masked(std::size_t pos) const;
    bool intersects_mask(Span span) const;
    /// Innermost literal containing `span`, if any.
    std::optional<Span> literal_containing(Span span) const;
};

/// Masks comments, docstrings and fenced blocks for Python, JavaScript and Shell, plus the
/// non-script parts of markup containers. String literals are never masked.
/// Throws UnsupportedLanguageError for Language::Other.
ExecutableView strip_non_executable(const SourceFile& file);

/// Unmasked view for keyword-only files.
ExecutableView identity_view(const SourceFile& file);

enum class SinkCategory { Network = 1, Logging = 2, FileIO = 3 };

NLOHMANN_JSON_SERIALIZE_ENUM(SinkCategory, {{SinkCategory::Network, "network"},
                                            {SinkCategory::Logging, "logging"},
                                            {SinkCategory::FileIO, "file_io"}})

/// 1 is the most severe.
inline int severity_rank(SinkCategory c) { return static_cast<int>(c); }
std::string_view to_string(SinkCategory c);

struct SinkEntry {
    std::string callee;  // dotted path ("requests.post") or bare name ("print")
    SinkCategory category = SinkCategory::Network;
};

class SinkTable {
  public:
    SinkTable() = default;
    explicit SinkTable(std::vector<SinkEntry> entries);

    static SinkTable defaults();

    const std::vector<SinkEntry>& entries() const { return entries_; }
    void add(SinkEntry entry);

    /// Dotted entries match the full callee path or a dotted suffix of it; bare entries match
    /// the terminal name. Path matches win over terminal matches, then the most severe wins.
    std::optional<SinkEntry> lookup(std::string_view callee_path) const;

    nlohmann::json to_json() const;

  private:
    std::vector<SinkEntry> entries_;
};

/// Sink table, placeholder patterns and fetch-execute signatures.
/// JSON: {"replace"?: bool, "sinks"?: {"network": [...], "logging": [...], "file_io": [...]},
///        "placeholders"?: [...], "fetch_execute_signatures"?: [...]}
struct CodeConfig {
    SinkTable sinks;
    std::vector<std::string> placeholder_patterns;      // case-insensitive, searched in literal bodies
    std::vector<std::string> fetch_execute_signatures;  // case-sensitive, searched in decoded text

    static CodeConfig defaults();
    static CodeConfig from_json(const nlohmann::json& doc, const CodeConfig& base);
    static CodeConfig load(const std::filesystem::path& path, const CodeConfig& base);
    nlohmann::json to_json() const;
    std::string digest() const;
};

/// Enclosing function of a match; `name` is empty at module top level.
struct Scope {
    bool top_level = true;
    std::string name;

    static Scope module() { return {}; }
    static Scope function(std::string n) { return {false, std::move(n)}; }
    std::string to_string() const { return top_level ? "<module>" : name; }

    friend bool operator==(const Scope&, const Scope&) = default;
};

void to_json(nlohmann::json& j, const Scope& s);
void from_json(const nlohmann::json& j, Scope& s);

struct SinkFinding {
    CredentialMatch match;
    std::string callee;
    SinkCategory sink = SinkCategory::Network;
    Scope enclosing_scope;
    std::string file;
    Span call_span;
    Span arguments_span;

    friend bool operator==(const SinkFinding&, const SinkFinding&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SinkFinding, match, callee, sink, enclosing_scope, file, call_span, arguments_span)

/// A call whose arguments contain a credential match, whatever the callee.
struct CallSite {
    CredentialMatch match;
    std::string callee;
    Span call_span;
    Span arguments_span;
    Scope enclosing_scope;

    friend bool operator==(const CallSite&, const CallSite&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CallSite, match, callee, call_span, arguments_span, enclosing_scope)

/// Severity rank, then file, then match offset, then call offset.
void sort_by_severity(std::vector<SinkFinding>& findings);

struct ObfuscationFinding {
    std::string file;
    Span span;
    std::string encoding = "base64";
    std::string decoded_preview;  // first 200 bytes
    std::string decoded_text;
    std::vector<CredentialMatch> rescan_matches;  // file is "<file>#base64@<offset>"
    std::vector<std::string> signature_hits;

    bool has_evidence() const { return !rescan_matches.empty() || !signature_hits.empty(); }
    friend bool operator==(const ObfuscationFinding&, const ObfuscationFinding&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ObfuscationFinding, file, span, encoding, decoded_preview, decoded_text,
                                   rescan_matches, signature_hits)

struct Diagnostic {
    std::string file;
    std::string message;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Diagnostic, file, message)

/// Compiled CodeConfig; immutable and shareable across threads.
class CodeAnalyzer {
  public:
    explicit CodeAnalyzer(CodeConfig config);

    const CodeConfig& config() const;

    /// Drops matches whose surrounding literal looks like a placeholder. Each such literal is
    /// recorded in the view as a PlaceholderExample region and blanked in masked_text.
    std::vector<CredentialMatch> filter_placeholders(ExecutableView& view,
                                                     const std::vector<CredentialMatch>& matches) const;

    std::vector<ObfuscationFinding> scan_obfuscation(const ExecutableView& view, const KeywordDictionary& dict) const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

/// Keyword matches over masked_text, minus any touching a masked region.
std::vector<CredentialMatch> scan_executable(const ExecutableView& view, const KeywordDictionary& dict);

/// Syntax tree for a Python or JavaScript view. One instance per analysis; not shareable.
class ParsedSource {
  public:
    explicit ParsedSource(const ExecutableView& view);
    ~ParsedSource();
    ParsedSource(ParsedSource&&) noexcept;
    ParsedSource& operator=(ParsedSource&&) noexcept;
    ParsedSource(const ParsedSource&) = delete;
    ParsedSource& operator=(const ParsedSource&) = delete;

    /// False when the tree contains syntax errors.
    bool ok() const;
    /// Whether the tree is usable despite errors (TypeScript parsed with the JavaScript grammar).
    bool usable() const;
    const std::string& error() const;

  private:
    friend Scope resolve_scope(const ParsedSource&, const CredentialMatch&);
    friend std::vector<CallSite> enclosing_calls(const ParsedSource&, const std::vector<CredentialMatch>&);
    friend std::vector<SinkFinding> detect_sinks(const ParsedSource&, const std::vector<CredentialMatch>&,
                                                 const SinkTable&);
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Nearest enclosing function-like node; anonymous functions take the name of the declarator,
/// assignment target or object key that binds them, else "<anonymous@LINE>".
/// Throws ArgumentError if the tree is unusable.
Scope resolve_scope(const ParsedSource& parsed, const CredentialMatch& match);

/// Every call (nearest first) whose arguments contain each match, searched up to the
/// enclosing function boundary. Empty if the tree is unusable.
std::vector<CallSite> enclosing_calls(const ParsedSource& parsed, const std::vector<CredentialMatch>& matches);

/// Call sites whose callee is in the sink table, ordered by severity.
std::vector<SinkFinding> sink_findings_from(const std::vector<CallSite>& calls, const std::string& file,
                                            const SinkTable& sinks);

/// One finding per (match, sink call) pair where the match lies inside the call's arguments.
/// Ancestors are searched up to the enclosing function boundary. Ordered by severity.
std::vector<SinkFinding> detect_sinks(const ParsedSource& parsed, const std::vector<CredentialMatch>& matches,
                                      const SinkTable& sinks);

/// Parses `view` and runs detect_sinks; a parse failure appends a diagnostic and yields nothing.
std::vector<SinkFinding> detect_sinks(const ExecutableView& view, const std::vector<CredentialMatch>& matches,
                                      const SinkTable& sinks, std::vector<Diagnostic>* diagnostics = nullptr);

struct FileAnalysis {
    ExecutableView view;
    std::vector<CredentialMatch> matches;  // after masking and placeholder filtering
    std::vector<CallSite> call_sites;
    std::vector<SinkFinding> sink_findings;
    std::vector<ObfuscationFinding> obfuscation_findings;
    std::vector<Diagnostic> diagnostics;
    bool ast_analyzed = false;
};

FileAnalysis analyze_source(const SourceFile& file, const KeywordDictionary& dict, const CodeAnalyzer& analyzer);

bool retain_skill_code(const SkillBundle& bundle, const std::vector<SinkFinding>& sink_findings,
                       const std::vector<ObfuscationFinding>& obfuscation_findings);

}  // namespace skillscan
