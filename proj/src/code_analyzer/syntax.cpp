#include <algorithm>
#include <cstring>

#include <tree_sitter/api.h>

#include "skillscan/code_analyzer.hpp"
#include "skillscan/text.hpp"

extern "C" const TSLanguage* tree_sitter_python(void);
extern "C" const TSLanguage* tree_sitter_javascript(void);

namespace skillscan {

namespace {

bool is_typescript(std::string_view path) {
    for (std::string_view ext : {".ts", ".tsx", ".mts", ".cts"}) {
        if (path.size() >= ext.size() && path.substr(path.size() - ext.size()) == ext) return true;
    }
    return false;
}

bool type_is(TSNode n, const char* type) { return std::strcmp(ts_node_type(n), type) == 0; }

template <std::size_t N>
bool type_in(TSNode n, const char* const (&types)[N]) {
    const char* t = ts_node_type(n);
    return std::any_of(std::begin(types), std::end(types), [&](const char* x) { return std::strcmp(t, x) == 0; });
}

TSNode field(TSNode n, const char* name) {
    return ts_node_child_by_field_name(n, name, static_cast<std::uint32_t>(std::strlen(name)));
}

Span span_of(TSNode n) { return {ts_node_start_byte(n), ts_node_end_byte(n)}; }

const char* const kFunctionTypes[] = {"function_definition",  "lambda",
                                      "function_declaration", "generator_function_declaration",
                                      "function_expression",  "function",
                                      "generator_function",   "arrow_function",
                                      "method_definition"};

const char* const kCallTypes[] = {"call", "call_expression"};

// First line containing an ERROR or MISSING node.
std::optional<std::uint32_t> first_error_row(TSNode n) {
    if (ts_node_is_error(n) || ts_node_is_missing(n)) return ts_node_start_point(n).row;
    const std::uint32_t count = ts_node_child_count(n);
    for (std::uint32_t i = 0; i < count; ++i) {
        TSNode c = ts_node_child(n, i);
        if (ts_node_has_error(c)) {
            if (auto row = first_error_row(c)) return row;
        }
    }
    return std::nullopt;
}

}  // namespace

struct ParsedSource::Impl {
    std::string file;
    std::string text;
    TSParser* parser = nullptr;
    TSTree* tree = nullptr;
    bool ok = false;
    bool usable = false;
    std::string error;

    ~Impl() {
        if (tree) ts_tree_delete(tree);
        if (parser) ts_parser_delete(parser);
    }

    std::string text_of(TSNode n) const {
        const Span s = span_of(n);
        return text.substr(s.start, s.size());
    }

    TSNode node_for(Span span) const {
        TSNode root = ts_tree_root_node(tree);
        return ts_node_descendant_for_byte_range(root, static_cast<std::uint32_t>(span.start),
                                                 static_cast<std::uint32_t>(span.end));
    }

    std::string callee_path(TSNode n) const {
        if (ts_node_is_null(n)) return "<expr>";
        static const char* const kNames[] = {"identifier", "property_identifier", "this", "super",
                                             "private_property_identifier"};
        if (type_in(n, kNames)) return text_of(n);
        if (type_is(n, "attribute")) return callee_path(field(n, "object")) + "." + text_of(field(n, "attribute"));
        if (type_is(n, "member_expression")) {
            return callee_path(field(n, "object")) + "." + text_of(field(n, "property"));
        }
        if (type_in(n, kCallTypes)) return callee_path(field(n, "function")) + "()";
        if (type_is(n, "subscript")) return callee_path(field(n, "value")) + "[]";
        if (type_is(n, "subscript_expression")) return callee_path(field(n, "object")) + "[]";
        if (type_is(n, "parenthesized_expression") && ts_node_named_child_count(n) > 0) {
            return callee_path(ts_node_named_child(n, 0));
        }
        return "<expr>";
    }

    // Name of the binding an anonymous function is assigned to, if any.
    std::optional<std::string> binding_name(TSNode fn) const {
        TSNode p = ts_node_parent(fn);
        while (!ts_node_is_null(p) && type_is(p, "parenthesized_expression")) p = ts_node_parent(p);
        if (ts_node_is_null(p)) return std::nullopt;
        TSNode target{};
        if (type_is(p, "variable_declarator")) {
            target = field(p, "name");
        } else if (type_is(p, "assignment_expression") || type_is(p, "assignment")) {
            target = field(p, "left");
        } else if (type_is(p, "pair")) {
            target = field(p, "key");
        } else if (type_is(p, "field_definition") || type_is(p, "public_field_definition")) {
            target = field(p, "property");
        } else if (type_is(p, "keyword_argument")) {
            target = field(p, "name");
        } else {
            return std::nullopt;
        }
        if (ts_node_is_null(target)) return std::nullopt;
        std::string name = text_of(target);
        if (name.size() >= 2 && (name.front() == '"' || name.front() == '\'') && name.back() == name.front()) {
            name = name.substr(1, name.size() - 2);
        }
        return name;
    }

    std::string function_name(TSNode fn) const {
        TSNode name = field(fn, "name");
        if (!ts_node_is_null(name)) return text_of(name);
        if (auto bound = binding_name(fn)) return *bound;
        return "<anonymous@" + std::to_string(ts_node_start_point(fn).row + 1) + ">";
    }

    // A match inside a definition's own name belongs to the outer scope.
    bool encloses_body(TSNode fn, Span match) const {
        TSNode name = field(fn, "name");
        return ts_node_is_null(name) || !span_of(name).contains(match);
    }
};

ParsedSource::ParsedSource(const ExecutableView& view) : impl_(std::make_unique<Impl>()) {
    impl_->file = view.file;
    const TSLanguage* lang = nullptr;
    if (view.language == Language::Python) {
        lang = tree_sitter_python();
    } else if (view.language == Language::JavaScript) {
        lang = tree_sitter_javascript();
    } else {
        throw UnsupportedLanguageError("no grammar for " + view.file + " (" + std::string(to_string(view.language)) + ")");
    }
    impl_->text = view.original;
    // Markup outside script bodies is blanked so the JavaScript grammar only sees script.
    for (const auto& m : view.masked_regions) {
        if (m.reason != MaskReason::NonScriptMarkup) continue;
        for (std::size_t p = m.span.start; p < m.span.end; ++p) {
            if (impl_->text[p] != '\n' && impl_->text[p] != '\r') impl_->text[p] = ' ';
        }
    }
    impl_->parser = ts_parser_new();
    if (!ts_parser_set_language(impl_->parser, lang)) {
        impl_->error = "grammar version mismatch";
        return;
    }
    impl_->tree = ts_parser_parse_string(impl_->parser, nullptr, impl_->text.data(),
                                         static_cast<std::uint32_t>(impl_->text.size()));
    if (!impl_->tree) {
        impl_->error = "parser returned no tree";
        return;
    }
    TSNode root = ts_tree_root_node(impl_->tree);
    impl_->ok = !ts_node_has_error(root);
    impl_->usable = impl_->ok || is_typescript(view.file);
    if (!impl_->ok) {
        const auto row = first_error_row(root);
        impl_->error = "syntax error" + (row ? " near line " + std::to_string(*row + 1) : std::string());
    }
}

ParsedSource::~ParsedSource() = default;
ParsedSource::ParsedSource(ParsedSource&&) noexcept = default;
ParsedSource& ParsedSource::operator=(ParsedSource&&) noexcept = default;

bool ParsedSource::ok() const { return impl_->ok; }
bool ParsedSource::usable() const { return impl_->usable; }
const std::string& ParsedSource::error() const { return impl_->error; }

Scope resolve_scope(const ParsedSource& parsed, const CredentialMatch& match) {
    const auto& impl = *parsed.impl_;
    if (!impl.usable) throw ArgumentError("cannot resolve scope in " + impl.file + ": " + impl.error);
    for (TSNode n = impl.node_for(match.span); !ts_node_is_null(n); n = ts_node_parent(n)) {
        if (type_in(n, kFunctionTypes) && impl.encloses_body(n, match.span)) {
            return Scope::function(impl.function_name(n));
        }
    }
    return Scope::module();
}

std::vector<CallSite> enclosing_calls(const ParsedSource& parsed, const std::vector<CredentialMatch>& matches) {
    const auto& impl = *parsed.impl_;
    std::vector<CallSite> out;
    if (!impl.usable) return out;
    for (const auto& m : matches) {
        for (TSNode n = impl.node_for(m.span); !ts_node_is_null(n); n = ts_node_parent(n)) {
            if (type_in(n, kFunctionTypes) && impl.encloses_body(n, m.span)) break;
            if (!type_in(n, kCallTypes)) continue;
            TSNode args = field(n, "arguments");
            if (ts_node_is_null(args) || !span_of(args).contains(m.span)) continue;
            out.push_back({m, impl.callee_path(field(n, "function")), span_of(n), span_of(args), resolve_scope(parsed, m)});
        }
    }
    return out;
}

std::vector<SinkFinding> sink_findings_from(const std::vector<CallSite>& calls, const std::string& file,
                                            const SinkTable& sinks) {
    std::vector<SinkFinding> out;
    for (const auto& c : calls) {
        if (auto entry = sinks.lookup(c.callee)) {
            out.push_back({c.match, c.callee, entry->category, c.enclosing_scope, file, c.call_span, c.arguments_span});
        }
    }
    sort_by_severity(out);
    return out;
}

std::vector<SinkFinding> detect_sinks(const ParsedSource& parsed, const std::vector<CredentialMatch>& matches,
                                      const SinkTable& sinks) {
    return sink_findings_from(enclosing_calls(parsed, matches), parsed.impl_->file, sinks);
}

std::vector<SinkFinding> detect_sinks(const ExecutableView& view, const std::vector<CredentialMatch>& matches,
                                      const SinkTable& sinks, std::vector<Diagnostic>* diagnostics) {
    ParsedSource parsed(view);
    if (!parsed.ok() && diagnostics) diagnostics->push_back({view.file, parsed.error()});
    if (!parsed.usable()) return {};
    return detect_sinks(parsed, matches, sinks);
}

}  // namespace skillscan
