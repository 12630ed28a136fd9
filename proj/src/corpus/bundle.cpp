#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "skillscan/corpus.hpp"
#include "skillscan/text.hpp"

namespace fs = std::filesystem;

namespace skillscan {

namespace {

constexpr std::size_t kMaxFileBytes = 8u << 20;

const std::set<std::string, std::less<>> kNlExtensions = {".md", ".markdown", ".mdx", ".txt", ".rst"};
const std::set<std::string, std::less<>> kConfigExtensions = {".json", ".yaml", ".yml",        ".toml",
                                                              ".ini",  ".cfg",  ".conf",       ".env",
                                                              ".properties", ".xml", ".plist"};

std::optional<Language> language_from_extension(std::string_view ext) {
    if (ext == ".py" || ext == ".pyw") return Language::Python;
    if (ext == ".js" || ext == ".mjs" || ext == ".cjs" || ext == ".jsx" || ext == ".ts" || ext == ".tsx" ||
        ext == ".mts" || ext == ".cts") {
        return Language::JavaScript;
    }
    if (ext == ".sh" || ext == ".bash" || ext == ".zsh") return Language::Shell;
    return std::nullopt;
}

std::optional<Language> language_from_shebang(std::string_view text) {
    if (text.substr(0, 2) != "#!") {
        return std::nullopt;
    }
    const auto eol = text.find('\n');
    const std::string line = text::to_lower(text.substr(0, eol));
    if (line.find("python") != std::string::npos) return Language::Python;
    if (line.find("node") != std::string::npos || line.find("deno") != std::string::npos ||
        line.find("bun") != std::string::npos) {
        return Language::JavaScript;
    }
    for (std::string_view shell : {"bash", "/sh", " sh", "zsh", "dash", "ksh"}) {
        if (line.find(shell) != std::string::npos) return Language::Shell;
    }
    return std::nullopt;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool looks_binary(std::string_view data) {
    return data.substr(0, 8192).find('\0') != std::string_view::npos;
}

bool contains_script_element(std::string_view data) {
    const std::string lower = text::to_lower(data);
    const auto pos = lower.find("<script");
    if (pos == std::string::npos) {
        return false;
    }
    const auto after = pos + 7;
    return after < lower.size() && (lower[after] == '>' || text::is_space(lower[after]));
}

bool is_heading(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && line[i] == '#') ++i;
    return i > 0 && i <= 6 && (i == line.size() || line[i] == ' ' || line[i] == '\t');
}

// Length of the list marker at the start of `line`, or 0.
std::size_t list_marker_length(std::string_view line) {
    if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') && (line[1] == ' ' || line[1] == '\t')) {
        return 2;
    }
    std::size_t i = 0;
    while (i < line.size() && text::is_ascii_digit(line[i])) ++i;
    if (i > 0 && i <= 9 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') &&
        (line[i + 1] == ' ' || line[i + 1] == '\t')) {
        return i + 2;
    }
    return 0;
}

std::optional<std::string> frontmatter_category(std::string_view md) {
    if (md.substr(0, 4) != "---\n" && md.substr(0, 5) != "---\r\n") {
        return std::nullopt;
    }
    const auto close = md.find("\n---", 3);
    if (close == std::string_view::npos) {
        return std::nullopt;
    }
    std::istringstream in{std::string(md.substr(0, close))};
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("category:", 0) == 0) {
            std::string value = line.substr(9);
            const auto first = value.find_first_not_of(" \t\"'");
            const auto last = value.find_last_not_of(" \t\r\"'");
            if (first != std::string::npos && last >= first) {
                return value.substr(first, last - first + 1);
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Language lang) {
    switch (lang) {
        case Language::Python: return "python";
        case Language::JavaScript: return "javascript";
        case Language::Shell: return "shell";
        case Language::Other: return "other";
    }
    return "other";
}

std::vector<Span> split_sentences(std::string_view text) {
    std::vector<Span> out;
    constexpr auto none = std::string_view::npos;
    std::size_t current = none;

    auto close = [&](std::size_t end) {
        if (current == none) return;
        while (end > current && text::is_space(text[end - 1])) --end;
        if (end > current) out.push_back({current, end});
        current = none;
    };
    auto is_terminator = [](char c) { return c == '.' || c == '!' || c == '?'; };

    std::size_t pos = 0;
    const std::size_t n = text.size();
    while (pos < n) {
        std::size_t eol = text.find('\n', pos);
        if (eol == none) eol = n;

        std::size_t first = pos;
        while (first < eol && (text[first] == ' ' || text[first] == '\t' || text[first] == '\r')) ++first;
        if (first == eol) {
            close(pos);
            pos = eol + 1;
            continue;
        }

        const std::string_view line = text.substr(first, eol - first);
        std::size_t scan_from = first;
        const bool heading = is_heading(line);
        if (heading) {
            close(pos);
            current = first;
            scan_from = first + line.find_first_not_of('#');
        } else if (const auto marker = list_marker_length(line); marker > 0) {
            close(pos);
            current = first;
            scan_from = first + marker;
        }

        for (std::size_t i = scan_from; i < eol; ++i) {
            const char c = text[i];
            if (current == none && !text::is_space(c)) current = i;
            if (is_terminator(c)) {
                std::size_t j = i;
                while (j + 1 < eol && is_terminator(text[j + 1])) ++j;
                if (j + 1 == n || text::is_space(text[j + 1])) {
                    close(j + 1);
                }
                i = j;
            }
        }
        if (heading) close(eol);
        pos = eol + 1;
    }
    close(n);
    return out;
}

Language detect_language(std::string_view relative_path, std::string_view text) {
    const std::string ext = text::to_lower(fs::path(std::string(relative_path)).extension().string());
    const auto by_ext = language_from_extension(ext);
    const auto by_shebang = language_from_shebang(text);
    if (by_ext && by_shebang && *by_ext != *by_shebang) {
        return Language::Other;
    }
    if (by_ext) return *by_ext;
    if (by_shebang) return *by_shebang;
    return Language::Other;
}

SkillBundle load_bundle(const fs::path& path, std::optional<std::string> skill_id, std::optional<std::string> category) {
    std::error_code ec;
    if (!fs::exists(path, ec) || !fs::is_directory(path, ec)) {
        throw IoError("bundle directory not found: " + path.string());
    }

    SkillBundle bundle;
    bundle.root_path = path;
    if (skill_id) {
        bundle.skill_id = *skill_id;
    } else {
        auto normal = fs::absolute(path).lexically_normal();
        if (normal.filename().empty()) normal = normal.parent_path();
        bundle.skill_id = normal.filename().string();
    }
    bundle.category = std::move(category);

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(path, fs::directory_options::none, ec);
    if (ec) {
        throw IoError("cannot read bundle directory " + path.string() + ": " + ec.message());
    }
    for (const auto& entry : it) {
        if (entry.is_symlink(ec)) continue;
        if (entry.is_regular_file(ec)) files.push_back(entry.path());
    }
    if (files.empty()) {
        throw InputError("empty bundle: " + path.string());
    }
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
        return a.lexically_relative(path).generic_string() < b.lexically_relative(path).generic_string();
    });

    for (const auto& file : files) {
        const std::string rel = file.lexically_relative(path).generic_string();
        const std::string name = file.filename().string();
        const std::string ext = text::to_lower(file.extension().string());

        if (rel.rfind(".git/", 0) == 0 || rel.find("/.git/") != std::string::npos) {
            bundle.skipped.push_back({rel, "vcs metadata"});
            continue;
        }
        if (fs::file_size(file, ec) > kMaxFileBytes) {
            bundle.skipped.push_back({rel, "file too large"});
            continue;
        }
        std::string data = read_file(file);
        if (looks_binary(data)) {
            bundle.skipped.push_back({rel, "binary file"});
            continue;
        }

        if (kNlExtensions.contains(ext)) {
            if (!bundle.category && text::to_lower(name) == "skill.md") {
                bundle.category = frontmatter_category(data);
            }
            NLDocument doc{rel, std::move(data), {}};
            doc.sentences = split_sentences(doc.text);
            bundle.nl_documents.push_back(std::move(doc));
            continue;
        }
        if (language_from_extension(ext)) {
            const Language lang = detect_language(rel, data);
            bundle.source_files.push_back({rel, std::move(data), lang, false});
            continue;
        }
        if (contains_script_element(data)) {
            bundle.source_files.push_back({rel, std::move(data), Language::JavaScript, true});
            continue;
        }
        if (kConfigExtensions.contains(ext) || name.rfind(".env", 0) == 0) {
            bundle.source_files.push_back({rel, std::move(data), Language::Other, false});
            continue;
        }
        if (const auto lang = language_from_shebang(data)) {
            bundle.source_files.push_back({rel, std::move(data), *lang, false});
            continue;
        }
        if (ext.empty() && (name == "README" || name == "SKILL")) {
            NLDocument doc{rel, std::move(data), {}};
            doc.sentences = split_sentences(doc.text);
            bundle.nl_documents.push_back(std::move(doc));
            continue;
        }
        bundle.skipped.push_back({rel, "unrecognized file type"});
    }
    return bundle;
}

CorpusSnapshot load_snapshot_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw IoError("cannot read manifest " + manifest_path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    const fs::path base = manifest_path.parent_path();
    CorpusSnapshot snapshot;
    try {
        for (const auto& entry : doc.at("bundles")) {
            fs::path p = entry.at("path").get<std::string>();
            if (p.is_relative()) p = base / p;
            std::optional<std::string> id;
            std::optional<std::string> category;
            if (entry.contains("skill_id")) id = entry["skill_id"].get<std::string>();
            if (entry.contains("category") && !entry["category"].is_null()) category = entry["category"].get<std::string>();
            snapshot.bundles.push_back(load_bundle(p, id, category));
        }
        snapshot.population_size = doc.value("population_size", snapshot.bundles.size());
        snapshot.timestamp = doc.value("timestamp", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    validate_snapshot(snapshot);
    return snapshot;
}

CorpusSnapshot load_corpus(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw IoError("corpus directory not found: " + dir.string());
    }
    if (fs::exists(dir / "manifest.json")) {
        return load_snapshot_manifest(dir / "manifest.json");
    }
    CorpusSnapshot snapshot;
    std::vector<fs::path> subdirs;
    bool has_markdown = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) {
            if (entry.path().filename().string().rfind('.', 0) != 0) subdirs.push_back(entry.path());
        } else if (entry.is_regular_file()) {
            const auto ext = text::to_lower(entry.path().extension().string());
            has_markdown = has_markdown || ext == ".md" || ext == ".markdown";
        }
    }
    if (has_markdown) {
        snapshot.bundles.push_back(load_bundle(dir));
    } else {
        std::sort(subdirs.begin(), subdirs.end());
        for (const auto& sub : subdirs) snapshot.bundles.push_back(load_bundle(sub));
    }
    snapshot.population_size = snapshot.bundles.size();
    validate_snapshot(snapshot);
    return snapshot;
}

void validate_snapshot(const CorpusSnapshot& snapshot) {
    std::set<std::string, std::less<>> ids;
    for (const auto& b : snapshot.bundles) {
        if (!ids.insert(b.skill_id).second) {
            throw InputError("duplicate skill_id in snapshot: " + b.skill_id);
        }
    }
    if (snapshot.population_size < snapshot.bundles.size()) {
        throw InputError("population_size is smaller than the number of bundles");
    }
}

}  // namespace skillscan
