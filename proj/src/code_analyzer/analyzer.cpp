#include <algorithm>
#include <set>

#include <boost/regex.hpp>

#include "skillscan/code_analyzer.hpp"
#include "skillscan/text.hpp"
#include "../regex_util.hpp"

namespace skillscan {

namespace {

constexpr std::size_t kMinBase64Length = 16;
constexpr std::size_t kPreviewLength = 200;
constexpr double kMinPrintableRatio = 0.95;

bool base64_run_char(char c) { return base64::is_alphabet_char(c) || c == '='; }

bool looks_like_text(std::string_view bytes) {
    if (bytes.empty()) return false;
    std::size_t printable = 0;
    for (unsigned char c : bytes) {
        if (c == 0) return false;
        if ((c >= 0x20 && c < 0x7f) || c == '\t' || c == '\n' || c == '\r') ++printable;
    }
    return static_cast<double>(printable) >= kMinPrintableRatio * static_cast<double>(bytes.size());
}

bool valid_padding(std::string_view run) {
    const auto eq = run.find('=');
    if (eq != std::string_view::npos) return run.size() % 4 == 0;
    return run.size() % 4 != 1;
}

// The value literal bound to a name on the same line: `NAME = "..."`, `name: "..."`.
std::optional<Span> assigned_literal(const ExecutableView& view, Span match) {
    const Span line = text::line_span(view.original, match.start);
    for (const auto& lit : view.string_literals) {
        if (lit.start < match.end) continue;
        if (lit.start >= line.end) break;
        std::string_view between(view.original.data() + match.end, lit.start - match.end);
        if (between.find_first_of("(,;") != std::string_view::npos) return std::nullopt;
        while (!between.empty() && text::is_space(between.back())) between.remove_suffix(1);
        if (!between.empty() && (between.back() == '=' || between.back() == ':')) return lit;
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

struct CodeAnalyzer::Impl {
    CodeConfig config;
    std::vector<boost::regex> placeholders;
    std::vector<boost::regex> signatures;
    boost::regex base64_run{"[A-Za-z0-9+/]{16,}={0,2}"};

    bool is_placeholder(std::string_view literal) const {
        return std::any_of(placeholders.begin(), placeholders.end(),
                           [&](const boost::regex& re) { return detail::search(literal, re); });
    }
};

CodeAnalyzer::CodeAnalyzer(CodeConfig config) {
    auto impl = std::make_shared<Impl>();
    for (const auto& p : config.placeholder_patterns) {
        try {
            impl->placeholders.emplace_back(p, boost::regex::perl | boost::regex::icase);
        } catch (const boost::regex_error& e) {
            throw ArgumentError("placeholder pattern does not compile: '" + p + "': " + e.what());
        }
    }
    for (const auto& s : config.fetch_execute_signatures) {
        try {
            impl->signatures.emplace_back(s, boost::regex::perl);
        } catch (const boost::regex_error& e) {
            throw ArgumentError("signature does not compile: '" + s + "': " + e.what());
        }
    }
    impl->config = std::move(config);
    impl_ = std::move(impl);
}

const CodeConfig& CodeAnalyzer::config() const { return impl_->config; }

std::vector<CredentialMatch> CodeAnalyzer::filter_placeholders(ExecutableView& view,
                                                               const std::vector<CredentialMatch>& matches) const {
    std::set<Span> dropped;
    for (const auto& m : matches) {
        for (const auto& lit : {view.literal_containing(m.span), assigned_literal(view, m.span)}) {
            if (lit && impl_->is_placeholder(std::string_view(view.original).substr(lit->start, lit->size()))) {
                dropped.insert(*lit);
            }
        }
    }
    for (const auto& lit : dropped) {
        const bool already = std::any_of(view.masked_regions.begin(), view.masked_regions.end(),
                                         [&](const MaskedRegion& r) { return r.span.intersects(lit); });
        if (already) continue;
        view.masked_regions.push_back({lit, MaskReason::PlaceholderExample});
        for (std::size_t p = lit.start; p < lit.end; ++p) {
            if (view.masked_text[p] != '\n' && view.masked_text[p] != '\r') view.masked_text[p] = ' ';
        }
    }
    std::sort(view.masked_regions.begin(), view.masked_regions.end(),
              [](const MaskedRegion& a, const MaskedRegion& b) { return a.span < b.span; });

    std::vector<CredentialMatch> kept;
    for (const auto& m : matches) {
        const bool hit = std::any_of(dropped.begin(), dropped.end(), [&](const Span& s) {
            return s.contains(m.span) || s == assigned_literal(view, m.span).value_or(Span{0, 0});
        });
        if (!hit && !view.intersects_mask(m.span)) kept.push_back(m);
    }
    return kept;
}

std::vector<ObfuscationFinding> CodeAnalyzer::scan_obfuscation(const ExecutableView& view,
                                                               const KeywordDictionary& dict) const {
    std::vector<ObfuscationFinding> out;
    const std::string_view t = view.masked_text;
    detail::for_each_match(t, impl_->base64_run, [&](Span s) {
        if (s.start > 0 && base64_run_char(t[s.start - 1])) return;
        if (s.end < t.size() && base64_run_char(t[s.end])) return;
        const std::string_view run = t.substr(s.start, s.size());
        if (run.size() < kMinBase64Length || !valid_padding(run)) return;
        // JWT segments are base64url JSON; they are credentials, not obfuscated payloads.
        const bool jwt = run.substr(0, 3) == "eyJ" &&
                         ((s.end < t.size() && t[s.end] == '.') || (s.start > 0 && t[s.start - 1] == '.'));
        if (jwt) return;
        auto decoded = base64::decode(run);
        if (!decoded || !looks_like_text(*decoded)) return;

        ObfuscationFinding f;
        f.file = view.file;
        f.span = s;
        f.decoded_text = *decoded;
        f.decoded_preview = decoded->substr(0, kPreviewLength);
        f.rescan_matches = dict.scan(*decoded, Stream::Code, view.file + "#base64@" + std::to_string(s.start));
        std::set<std::string> hits;
        for (const auto& re : impl_->signatures) {
            detail::for_each_match(*decoded, re, [&](Span h) { hits.insert(decoded->substr(h.start, h.size())); });
        }
        f.signature_hits.assign(hits.begin(), hits.end());
        if (f.has_evidence()) out.push_back(std::move(f));
    });
    return out;
}

FileAnalysis analyze_source(const SourceFile& file, const KeywordDictionary& dict, const CodeAnalyzer& analyzer) {
    FileAnalysis fa;
    if (file.language == Language::Other) {
        fa.view = identity_view(file);
        fa.matches = dict.scan(file.text, Stream::Code, file.relative_path);
        return fa;
    }
    fa.view = strip_non_executable(file);
    fa.matches = analyzer.filter_placeholders(fa.view, scan_executable(fa.view, dict));
    fa.obfuscation_findings = analyzer.scan_obfuscation(fa.view, dict);
    if (file.language == Language::Python || file.language == Language::JavaScript) {
        ParsedSource parsed(fa.view);
        if (!parsed.ok()) fa.diagnostics.push_back({file.relative_path, parsed.error()});
        if (parsed.usable()) {
            fa.call_sites = enclosing_calls(parsed, fa.matches);
            fa.sink_findings = sink_findings_from(fa.call_sites, file.relative_path, analyzer.config().sinks);
            fa.ast_analyzed = true;
        }
    }
    return fa;
}

bool retain_skill_code(const SkillBundle& /*bundle*/, const std::vector<SinkFinding>& sink_findings,
                       const std::vector<ObfuscationFinding>& obfuscation_findings) {
    if (!sink_findings.empty()) return true;
    return std::any_of(obfuscation_findings.begin(), obfuscation_findings.end(),
                       [](const ObfuscationFinding& f) { return f.has_evidence(); });
}

}  // namespace skillscan
