#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillscan/common.hpp"

namespace skillscan {

enum class Language { Python, JavaScript, Shell, Other };

NLOHMANN_JSON_SERIALIZE_ENUM(Language, {{Language::Python, "python"},
                                        {Language::JavaScript, "javascript"},
                                        {Language::Shell, "shell"},
                                        {Language::Other, "other"}})

std::string_view to_string(Language lang);

/// A natural-language artifact (SKILL.md, README, prompts) with its sentence segmentation.
struct NLDocument {
    std::string relative_path;
    std::string text;
    std::vector<Span> sentences;
};

struct SourceFile {
    std::string relative_path;
    std::string text;
    Language language = Language::Other;
    /// Markup (SVG/HTML) carrying a <script> element; only the script bodies are executable.
    bool markup_container = false;
};

struct SkippedFile {
    std::string relative_path;
    std::string reason;

    friend bool operator==(const SkippedFile&, const SkippedFile&) = default;
};

struct SkillBundle {
    std::string skill_id;
    std::filesystem::path root_path;
    std::vector<NLDocument> nl_documents;
    std::vector<SourceFile> source_files;
    std::vector<SkippedFile> skipped;
    std::optional<std::string> category;
};

struct CorpusSnapshot {
    std::vector<SkillBundle> bundles;
    std::size_t population_size = 0;
    std::string timestamp;
};

inline constexpr std::string_view kUncategorized = "Uncategorized";

/// Sentence boundaries: `.`, `!`, `?` followed by whitespace or end of text, blank lines,
/// and the start of Markdown headings or list items. Spans are trimmed and never empty.
std::vector<Span> split_sentences(std::string_view text);

/// Extension first, then shebang; a disagreement between the two yields Other.
Language detect_language(std::string_view relative_path, std::string_view text);

/// Loads one skill directory. Throws IoError if `path` is not a readable directory and
/// InputError("empty bundle") if it holds no regular files.
SkillBundle load_bundle(const std::filesystem::path& path, std::optional<std::string> skill_id = std::nullopt,
                        std::optional<std::string> category = std::nullopt);

/// Manifest: {"population_size": N, "timestamp": "...", "bundles": [{"path", "category"?, "skill_id"?}]}.
/// Relative bundle paths resolve against the manifest's directory.
CorpusSnapshot load_snapshot_manifest(const std::filesystem::path& manifest_path);

/// A directory with `manifest.json` loads through the manifest; a directory holding Markdown
/// directly is a single bundle; otherwise every immediate subdirectory is a bundle.
CorpusSnapshot load_corpus(const std::filesystem::path& dir);

/// Checks skill_id uniqueness and population_size >= bundle count.
void validate_snapshot(const CorpusSnapshot& snapshot);

/// Inverse of the standard normal CDF.
double normal_quantile(double probability);

/// Cochran's sample size with finite population correction:
/// n0 = z^2 p (1-p) / e^2, n = ceil(n0 / (1 + (n0 - 1) / N)), z two-sided for `confidence`.
std::size_t required_sample_size(std::size_t population, double confidence, double margin, double p = 0.5);

/// Largest-remainder proportional allocation; ties go to the lexicographically smaller stratum.
std::map<std::string, std::size_t> allocate_strata(const std::map<std::string, std::size_t>& stratum_sizes,
                                                   double fraction);

/// Proportional stratified sample keyed on bundle category. Deterministic for a fixed seed;
/// the result keeps snapshot order.
std::vector<SkillBundle> stratified_sample(const CorpusSnapshot& snapshot, double fraction, std::uint64_t seed);

}  // namespace skillscan
