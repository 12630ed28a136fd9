#include <algorithm>
#include <cstring>

#include "skillscan/code_analyzer.hpp"
#include "skillscan/text.hpp"

namespace skillscan {

namespace {

struct LexResult {
    std::vector<MaskedRegion> regions;
    std::vector<Span> literals;
};

std::size_t line_end(std::string_view t, std::size_t i) {
    const auto nl = t.find('\n', i);
    return nl == std::string_view::npos ? t.size() : nl;
}

// Markdown fences (``` or ~~~ at line start) inside a comment or docstring become their own
// regions; the rest keeps `reason`.
void push_with_fences(std::string_view t, Span span, MaskReason reason, std::vector<MaskedRegion>& out) {
    std::size_t cursor = span.start;
    std::size_t pos = span.start;
    std::size_t open = 0;
    bool in_fence = false;
    std::string fence;
    while (pos < span.end) {
        const std::size_t eol = std::min(line_end(t, pos), span.end);
        std::size_t p = pos;
        while (p < eol && (t[p] == ' ' || t[p] == '\t' || t[p] == '*')) ++p;
        const std::string_view rest = t.substr(p, eol - p);
        const bool is_fence = rest.substr(0, 3) == "```" || rest.substr(0, 3) == "~~~";
        if (is_fence) {
            if (!in_fence) {
                open = pos;
                in_fence = true;
                fence = std::string(rest.substr(0, 3));
            } else if (rest.substr(0, 3) == fence) {
                if (open > cursor) out.push_back({{cursor, open}, reason});
                out.push_back({{open, eol}, MaskReason::FencedBlock});
                cursor = eol;
                in_fence = false;
            }
        }
        pos = eol + 1;
    }
    if (span.end > cursor) out.push_back({{cursor, span.end}, reason});
}

// Returns the end of a quoted literal starting at `q` (the opening quote), honouring
// backslash escapes. Single-line literals stop at an unescaped newline.
std::size_t scan_quoted(std::string_view t, std::size_t q, std::string_view quote, bool multiline, bool escapes) {
    std::size_t i = q + quote.size();
    while (i < t.size()) {
        if (escapes && t[i] == '\\') {
            i += 2;
            continue;
        }
        if (t.compare(i, quote.size(), quote) == 0) return i + quote.size();
        if (!multiline && t[i] == '\n') return i;
        ++i;
    }
    return t.size();
}

bool is_python_prefix(std::string_view ident) {
    if (ident.empty() || ident.size() > 2) return false;
    const std::string lower = text::to_lower(ident);
    static const char* kPrefixes[] = {"r", "b", "u", "f", "rb", "br", "fr", "rf"};
    return std::any_of(std::begin(kPrefixes), std::end(kPrefixes), [&](const char* p) { return lower == p; });
}

bool rest_of_line_blank(std::string_view t, std::size_t i) {
    while (i < t.size() && t[i] != '\n') {
        if (t[i] == '#') return true;
        if (t[i] != ' ' && t[i] != '\t' && t[i] != '\r' && t[i] != ';') return false;
        ++i;
    }
    return true;
}

LexResult lex_python(std::string_view t) {
    LexResult r;
    std::size_t i = 0;
    int depth = 0;
    bool line_start = true;
    while (i < t.size()) {
        const char c = t[i];
        if (c == '\n') {
            if (depth == 0) line_start = true;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
            ++i;
            continue;
        }
        if (c == '\\' && i + 1 < t.size() && t[i + 1] == '\n') {
            i += 2;
            continue;
        }
        if (c == '#') {
            const std::size_t e = line_end(t, i);
            r.regions.push_back({{i, e}, MaskReason::LineComment});
            i = e;
            continue;
        }
        std::size_t start = i;
        std::size_t q = i;
        if (text::is_ascii_letter(c) || c == '_') {
            std::size_t j = i;
            while (j < t.size() && (text::is_ascii_alnum(t[j]) || t[j] == '_')) ++j;
            if (j < t.size() && (t[j] == '"' || t[j] == '\'') && is_python_prefix(t.substr(i, j - i))) {
                q = j;
            } else {
                i = j;
                line_start = false;
                continue;
            }
        }
        if (t[q] == '"' || t[q] == '\'') {
            const bool triple = q + 2 < t.size() && t[q + 1] == t[q] && t[q + 2] == t[q];
            const std::string quote(triple ? 3 : 1, t[q]);
            const std::size_t end = scan_quoted(t, q, quote, triple, true);
            if (triple && line_start && depth == 0 && rest_of_line_blank(t, end)) {
                push_with_fences(t, {start, end}, MaskReason::Docstring, r.regions);
            } else {
                r.literals.push_back({start, end});
            }
            i = end;
            line_start = false;
            continue;
        }
        if (c == '(' || c == '[' || c == '{') ++depth;
        if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
        line_start = false;
        ++i;
    }
    return r;
}

class JsLexer {
  public:
    explicit JsLexer(std::string_view t) : t_(t) {}

    LexResult run() {
        std::size_t i = 0;
        if (t_.substr(0, 2) == "#!") {
            const std::size_t e = line_end(t_, 0);
            r_.regions.push_back({{0, e}, MaskReason::LineComment});
            i = e;
        }
        code(i, false);
        return std::move(r_);
    }

  private:
    // Lexes code from `i`; with `in_template` it stops after the brace closing a `${`.
    std::size_t code(std::size_t i, bool in_template) {
        int braces = 0;
        while (i < t_.size()) {
            const char c = t_[i];
            if (text::is_space(c)) {
                ++i;
                continue;
            }
            if (c == '/' && i + 1 < t_.size() && t_[i + 1] == '/') {
                const std::size_t e = line_end(t_, i);
                r_.regions.push_back({{i, e}, MaskReason::LineComment});
                i = e;
                continue;
            }
            if (c == '/' && i + 1 < t_.size() && t_[i + 1] == '*') {
                const auto close = t_.find("*/", i + 2);
                const std::size_t e = close == std::string_view::npos ? t_.size() : close + 2;
                push_with_fences(t_, {i, e}, MaskReason::BlockComment, r_.regions);
                i = e;
                continue;
            }
            if (c == '"' || c == '\'') {
                const std::size_t e = scan_quoted(t_, i, std::string(1, c), false, true);
                r_.literals.push_back({i, e});
                i = e;
                regex_ok_ = false;
                continue;
            }
            if (c == '`') {
                i = template_literal(i);
                regex_ok_ = false;
                continue;
            }
            if (c == '/' && regex_ok_) {
                if (auto e = regex_literal(i)) {
                    i = *e;
                    regex_ok_ = false;
                    continue;
                }
            }
            if (in_template) {
                if (c == '{') ++braces;
                if (c == '}') {
                    if (braces == 0) return i + 1;
                    --braces;
                }
            }
            if (text::is_ident_char(c)) {
                std::size_t j = i;
                while (j < t_.size() && text::is_ident_char(t_[j])) ++j;
                static const char* kKeywords[] = {"return", "typeof", "case",  "do",    "else",  "in",   "of",
                                                  "new",    "delete", "void",  "throw", "yield", "await"};
                const auto word = t_.substr(i, j - i);
                regex_ok_ = std::any_of(std::begin(kKeywords), std::end(kKeywords),
                                        [&](const char* k) { return word == k; });
                i = j;
                continue;
            }
            regex_ok_ = std::strchr("(,=:[!&|?{};+-*%<>~^", c) != nullptr;
            ++i;
        }
        return i;
    }

    std::size_t template_literal(std::size_t i) {
        std::size_t seg = i;
        ++i;
        while (i < t_.size()) {
            if (t_[i] == '\\') {
                i += 2;
                continue;
            }
            if (t_[i] == '`') {
                r_.literals.push_back({seg, i + 1});
                return i + 1;
            }
            if (t_[i] == '$' && i + 1 < t_.size() && t_[i + 1] == '{') {
                r_.literals.push_back({seg, i});
                const bool saved = regex_ok_;
                regex_ok_ = true;
                i = code(i + 2, true);
                regex_ok_ = saved;
                seg = i;
                continue;
            }
            ++i;
        }
        r_.literals.push_back({seg, t_.size()});
        return t_.size();
    }

    std::optional<std::size_t> regex_literal(std::size_t i) const {
        bool in_class = false;
        for (std::size_t j = i + 1; j < t_.size(); ++j) {
            const char c = t_[j];
            if (c == '\n') return std::nullopt;
            if (c == '\\') {
                ++j;
                continue;
            }
            if (c == '[') in_class = true;
            if (c == ']') in_class = false;
            if (c == '/' && !in_class) {
                if (j == i + 1) return std::nullopt;
                ++j;
                while (j < t_.size() && text::is_ascii_letter(t_[j])) ++j;
                return j;
            }
        }
        return std::nullopt;
    }

    std::string_view t_;
    LexResult r_;
    bool regex_ok_ = true;
};

LexResult lex_shell(std::string_view t) {
    LexResult r;
    std::vector<std::string> pending_heredocs;
    std::size_t i = 0;
    while (i < t.size()) {
        const char c = t[i];
        if (c == '\n') {
            ++i;
            for (const auto& delim : pending_heredocs) {
                const std::size_t body = i;
                while (i < t.size()) {
                    const std::size_t e = line_end(t, i);
                    std::string_view line = t.substr(i, e - i);
                    while (!line.empty() && (line.front() == '\t')) line.remove_prefix(1);
                    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                    if (line == delim) {
                        if (i > body) r.literals.push_back({body, i});
                        i = std::min(e + 1, t.size());
                        break;
                    }
                    i = std::min(e + 1, t.size());
                    if (e == t.size()) {
                        r.literals.push_back({body, t.size()});
                        break;
                    }
                }
            }
            pending_heredocs.clear();
            continue;
        }
        if (c == '\\') {
            i += 2;
            continue;
        }
        if (c == '#') {
            const bool word_start = i == 0 || text::is_space(t[i - 1]) || std::strchr(";&|()<>", t[i - 1]) != nullptr;
            if (word_start) {
                const std::size_t e = line_end(t, i);
                r.regions.push_back({{i, e}, MaskReason::LineComment});
                i = e;
                continue;
            }
        }
        if (c == '\'') {
            const bool ansi = i > 0 && t[i - 1] == '$';
            const std::size_t start = ansi ? i - 1 : i;
            const std::size_t e = scan_quoted(t, i, "'", true, ansi);
            r.literals.push_back({start, e});
            i = e;
            continue;
        }
        if (c == '"') {
            const std::size_t e = scan_quoted(t, i, "\"", true, true);
            r.literals.push_back({i, e});
            i = e;
            continue;
        }
        if (c == '<' && t.compare(i, 2, "<<") == 0 && t.compare(i, 3, "<<<") != 0) {
            std::size_t j = i + 2;
            if (j < t.size() && t[j] == '-') ++j;
            while (j < t.size() && (t[j] == ' ' || t[j] == '\t')) ++j;
            char quote = 0;
            if (j < t.size() && (t[j] == '\'' || t[j] == '"')) quote = t[j++];
            const std::size_t w = j;
            while (j < t.size() && (text::is_ident_char(t[j]) || t[j] == '-')) ++j;
            if (j > w) {
                pending_heredocs.emplace_back(t.substr(w, j - w));
                if (quote && j < t.size() && t[j] == quote) ++j;
                i = j;
                continue;
            }
        }
        ++i;
    }
    return r;
}

// Bodies of <script> elements; everything else in a markup container is inert.
std::vector<Span> script_bodies(std::string_view t) {
    std::vector<Span> out;
    const std::string lower = text::to_lower(t);
    std::size_t pos = 0;
    while (true) {
        const auto open = lower.find("<script", pos);
        if (open == std::string::npos) break;
        const auto gt = lower.find('>', open);
        if (gt == std::string::npos) break;
        const auto close = lower.find("</script", gt + 1);
        const std::size_t end = close == std::string::npos ? t.size() : close;
        out.push_back({gt + 1, end});
        if (close == std::string::npos) break;
        pos = close + 8;
    }
    return out;
}

void apply_mask(std::string& masked, Span span) {
    for (std::size_t p = span.start; p < span.end && p < masked.size(); ++p) {
        if (masked[p] != '\n' && masked[p] != '\r') masked[p] = ' ';
    }
}

void normalize(std::vector<MaskedRegion>& regions) {
    regions.erase(std::remove_if(regions.begin(), regions.end(), [](const MaskedRegion& m) { return m.span.size() == 0; }),
                  regions.end());
    std::sort(regions.begin(), regions.end(),
              [](const MaskedRegion& a, const MaskedRegion& b) { return a.span < b.span; });
}

}  // namespace

bool ExecutableView::is_masked(std::size_t pos) const {
    auto it = std::upper_bound(masked_regions.begin(), masked_regions.end(), pos,
                               [](std::size_t p, const MaskedRegion& m) { return p < m.span.start; });
    if (it == masked_regions.begin()) return false;
    return std::prev(it)->span.contains(pos);
}

bool ExecutableView::intersects_mask(Span span) const {
    return std::any_of(masked_regions.begin(), masked_regions.end(),
                       [&](const MaskedRegion& m) { return m.span.intersects(span); });
}

std::optional<Span> ExecutableView::literal_containing(Span span) const {
    std::optional<Span> best;
    for (const auto& lit : string_literals) {
        if (lit.start > span.start) break;
        if (lit.contains(span) && (!best || lit.size() < best->size())) best = lit;
    }
    return best;
}

ExecutableView identity_view(const SourceFile& file) {
    ExecutableView v;
    v.file = file.relative_path;
    v.language = file.language;
    v.markup_container = file.markup_container;
    v.original = file.text;
    v.masked_text = file.text;
    return v;
}

ExecutableView strip_non_executable(const SourceFile& file) {
    if (file.language == Language::Other) {
        throw UnsupportedLanguageError("no masking rules for " + file.relative_path +
                                       "; use the keyword-only path");
    }
    ExecutableView v = identity_view(file);
    std::vector<MaskedRegion> regions;

    std::string lex_input = file.text;
    if (file.markup_container) {
        std::size_t cursor = 0;
        for (const auto& body : script_bodies(file.text)) {
            regions.push_back({{cursor, body.start}, MaskReason::NonScriptMarkup});
            cursor = body.end;
        }
        regions.push_back({{cursor, file.text.size()}, MaskReason::NonScriptMarkup});
        for (const auto& m : regions) apply_mask(lex_input, m.span);
    }

    LexResult lex;
    switch (file.language) {
        case Language::Python: lex = lex_python(lex_input); break;
        case Language::JavaScript: lex = JsLexer(lex_input).run(); break;
        case Language::Shell: lex = lex_shell(lex_input); break;
        case Language::Other: break;
    }
    regions.insert(regions.end(), lex.regions.begin(), lex.regions.end());
    normalize(regions);
    for (const auto& m : regions) apply_mask(v.masked_text, m.span);
    v.masked_regions = std::move(regions);
    v.string_literals = std::move(lex.literals);
    std::sort(v.string_literals.begin(), v.string_literals.end());
    return v;
}

std::vector<CredentialMatch> scan_executable(const ExecutableView& view, const KeywordDictionary& dict) {
    auto matches = dict.scan(view.masked_text, Stream::Code, view.file);
    matches.erase(std::remove_if(matches.begin(), matches.end(),
                                 [&](const CredentialMatch& m) { return view.intersects_mask(m.span); }),
                  matches.end());
    // Report the original text; masking only ever removes characters.
    for (auto& m : matches) m.matched_text = view.original.substr(m.span.start, m.span.size());
    return matches;
}

}  // namespace skillscan
