#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <boost/regex.hpp>

#include "skillscan/nl_analyzer.hpp"
#include "skillscan/text.hpp"
#include "../regex_util.hpp"

namespace skillscan {

namespace {

const std::vector<std::string> kExtraTerms = {"api key", "api_key", "token", "password", "secret", "credential",
                                              "private key"};

const std::vector<std::string> kActionVerbs = {"send", "store",  "embed", "log",     "post",       "transmit",
                                               "upload", "write", "save", "forward", "exfiltrate", "print"};

const std::vector<std::string> kInjectionPhrases = {
    R"(ignore (?:all |any )?(?:of )?(?:the |your )?(?:previous|prior|above|earlier|preceding) (?:instructions|prompts|rules|directions))",
    R"(disregard (?:all |any )?(?:of )?(?:the |your )?(?:previous|prior|above|earlier|preceding) (?:instructions|prompts|rules|directions))",
    R"(override (?:the |your )?system prompt)",
    R"(disregard (?:all |any )?(?:the |your )?safety (?:guidelines|rules|policies))",
    R"(ignore (?:all |any )?(?:the |your )?safety (?:guidelines|rules|policies))",
    R"(forget (?:all )?(?:of )?(?:the |your )?(?:previous |prior )?instructions)",
    R"(you are now in (?:developer|admin|god) mode)",
    R"(new system prompt:)",
    R"(reveal (?:the |your )?system prompt)",
    R"(do not (?:tell|inform|alert|notify) the user)",
    R"(without (?:telling|informing|alerting|notifying) the user)",
};

const std::vector<std::string> kSocialEngineeringPhrases = {
    R"(for verification purposes,? (?:please )?provide)",
    R"(to continue,? (?:please )?(?:paste|enter|provide|share|type) your)",
    R"(paste your [^.!?\n]{0,60} here)",
    R"((?:reply|respond) with your [^.!?\n]{0,40}(?:key|token|password|secret|credentials?))",
    R"(your account will be (?:suspended|locked|deactivated|closed))",
    R"(verify your (?:identity|account) by (?:entering|providing|pasting|sharing))",
    R"(urgent(?:ly)?[:,]? (?:update|verify|confirm) your)",
};

void append_unique(std::vector<std::string>& into, const std::vector<std::string>& from) {
    for (const auto& s : from) {
        if (std::find(into.begin(), into.end(), s) == into.end()) into.push_back(s);
    }
}

boost::regex compile_rule(const std::string& source, const char* what) {
    try {
        return boost::regex(flexible_whitespace(source), boost::regex::perl | boost::regex::icase);
    } catch (const boost::regex_error& e) {
        throw ArgumentError(std::string("constraint ") + what + " does not compile: '" + source + "': " + e.what());
    }
}

std::vector<std::string> verb_forms(const std::string& verb) {
    static const std::map<std::string, std::vector<std::string>> irregular = {
        {"send", {"sent"}}, {"write", {"wrote", "written"}}, {"forward", {}}};
    std::vector<std::string> forms = {verb, verb + "s", verb + "es", verb + "d", verb + "ed", verb + "ing"};
    const char last = verb.back();
    forms.push_back(verb + last + "ed");
    forms.push_back(verb + last + "ing");
    if (last == 'e') forms.push_back(verb.substr(0, verb.size() - 1) + "ing");
    if (auto it = irregular.find(verb); it != irregular.end()) {
        forms.insert(forms.end(), it->second.begin(), it->second.end());
    }
    return forms;
}

boost::regex compile_verbs(const std::vector<std::string>& verbs) {
    std::set<std::string> forms;
    for (const auto& v : verbs) {
        for (auto& f : verb_forms(text::to_lower(v))) forms.insert(std::move(f));
    }
    std::vector<std::string> ordered(forms.begin(), forms.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const std::string& a, const std::string& b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
    std::string source = "(?:";
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (i) source += '|';
        source += ordered[i];
    }
    source += ')';
    return boost::regex(source, boost::regex::perl | boost::regex::icase);
}

}  // namespace

std::string flexible_whitespace(std::string_view pattern) {
    std::string out;
    bool in_class = false;
    bool escaped = false;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const char c = pattern[i];
        if (escaped) {
            out += c;
            escaped = false;
            continue;
        }
        if (c == '\\') {
            out += c;
            escaped = true;
            continue;
        }
        if (in_class) {
            if (c == ']') in_class = false;
            out += c;
            continue;
        }
        if (c == '[') {
            in_class = true;
            out += c;
            // A leading ']' (or '^]') is literal inside a bracket expression.
            if (i + 1 < pattern.size() && pattern[i + 1] == '^') out += pattern[++i];
            if (i + 1 < pattern.size() && pattern[i + 1] == ']') out += pattern[++i];
            continue;
        }
        if (c == ' ') {
            while (i + 1 < pattern.size() && pattern[i + 1] == ' ') ++i;
            out += "\\s+";
            continue;
        }
        out += c;
    }
    return out;
}

ConstraintRules ConstraintRules::defaults(const KeywordDictionary& dict) {
    ConstraintRules rules;
    append_unique(rules.credential_terms, dict.generic_patterns());
    append_unique(rules.credential_terms, kExtraTerms);
    rules.action_verbs = kActionVerbs;
    rules.injection_phrases = kInjectionPhrases;
    rules.social_engineering_phrases = kSocialEngineeringPhrases;
    return rules;
}

void ConstraintRules::merge(const ConstraintRules& other) {
    append_unique(credential_terms, other.credential_terms);
    append_unique(action_verbs, other.action_verbs);
    append_unique(injection_phrases, other.injection_phrases);
    append_unique(social_engineering_phrases, other.social_engineering_phrases);
}

void ConstraintRules::validate() const {
    std::set<std::string> terms;
    for (const auto& t : credential_terms) terms.insert(text::to_lower(t));
    for (const auto& v : action_verbs) {
        if (v.empty() || !std::all_of(v.begin(), v.end(), text::is_ascii_letter)) {
            throw ArgumentError("action verb must be a plain word: '" + v + "'");
        }
        if (terms.count(text::to_lower(v))) {
            throw ArgumentError("'" + v + "' appears as both a credential term and an action verb");
        }
    }
    for (const auto& s : credential_terms) compile_rule(s, "credential term");
    for (const auto& s : injection_phrases) compile_rule(s, "injection phrase");
    for (const auto& s : social_engineering_phrases) compile_rule(s, "social engineering phrase");
}

ConstraintRules ConstraintRules::from_json(const nlohmann::json& doc, const ConstraintRules& base) {
    ConstraintRules extra;
    try {
        extra.credential_terms = doc.value("credential_terms", std::vector<std::string>{});
        extra.action_verbs = doc.value("action_verbs", std::vector<std::string>{});
        extra.injection_phrases = doc.value("injection_phrases", std::vector<std::string>{});
        extra.social_engineering_phrases = doc.value("social_engineering_phrases", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed constraint rules: ") + e.what());
    }
    ConstraintRules out = base;
    out.merge(extra);
    out.validate();
    return out;
}

ConstraintRules ConstraintRules::load(const std::filesystem::path& path, const ConstraintRules& base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read constraint rules " + path.string());
    try {
        return from_json(nlohmann::json::parse(in), base);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed constraint rules " + path.string() + ": " + e.what());
    }
}

nlohmann::json ConstraintRules::to_json() const {
    return {{"credential_terms", credential_terms},
            {"action_verbs", action_verbs},
            {"injection_phrases", injection_phrases},
            {"social_engineering_phrases", social_engineering_phrases}};
}

std::string ConstraintRules::digest() const { return text::hex64(text::fnv1a64(to_json().dump())); }

bool NLFinding::triggered(Constraint c) const {
    return std::find(triggered_constraints.begin(), triggered_constraints.end(), c) != triggered_constraints.end();
}

std::vector<SemanticWindow> build_windows(const NLDocument& doc, const std::vector<CredentialMatch>& matches) {
    std::vector<SemanticWindow> out;
    out.reserve(matches.size());
    const auto& sentences = doc.sentences;
    for (const auto& m : matches) {
        if (m.stream != Stream::NL) {
            throw ArgumentError("build_windows expects NL-stream matches, got one in " + m.file);
        }
        auto it = std::find_if(sentences.begin(), sentences.end(),
                               [&](const Span& s) { return s.contains(m.span.start); });
        if (it == sentences.end() || m.span.end > doc.text.size()) {
            throw ConsistencyError("match at offset " + std::to_string(m.span.start) + " in " + doc.relative_path +
                                   " lies outside every sentence");
        }
        const auto idx = static_cast<std::size_t>(it - sentences.begin());
        const std::size_t first = idx == 0 ? 0 : idx - 1;
        const std::size_t last = std::min(idx + 1, sentences.size() - 1);

        SemanticWindow w;
        w.doc_path = doc.relative_path;
        for (std::size_t i = first; i <= last; ++i) w.sentence_indices.push_back(i);
        w.span = {sentences[first].start, sentences[last].end};
        w.text = doc.text.substr(w.span.start, w.span.size());
        w.anchor_match = m;
        out.push_back(std::move(w));
    }
    return out;
}

struct ConstraintEvaluator::Impl {
    std::vector<boost::regex> terms;
    boost::regex verbs;
    bool has_verbs = false;
    std::vector<boost::regex> injection;
    std::vector<boost::regex> social;
};

ConstraintEvaluator::ConstraintEvaluator(const ConstraintRules& rules) {
    rules.validate();
    auto impl = std::make_shared<Impl>();
    for (const auto& s : rules.credential_terms) impl->terms.push_back(compile_rule(s, "credential term"));
    if (!rules.action_verbs.empty()) {
        impl->verbs = compile_verbs(rules.action_verbs);
        impl->has_verbs = true;
    }
    for (const auto& s : rules.injection_phrases) impl->injection.push_back(compile_rule(s, "injection phrase"));
    for (const auto& s : rules.social_engineering_phrases) impl->social.push_back(compile_rule(s, "social engineering phrase"));
    impl_ = std::move(impl);
}

std::optional<NLFinding> ConstraintEvaluator::evaluate(const SemanticWindow& window) const {
    const std::string lowered = text::to_lower(window.text);
    const std::size_t base = window.span.start;
    std::vector<ConstraintEvidence> terms;
    std::vector<ConstraintEvidence> verbs;
    std::vector<ConstraintEvidence> evidence;

    auto record = [&](std::vector<ConstraintEvidence>& into, Constraint c, Span local) {
        into.push_back({c, lowered.substr(local.start, local.size()), {base + local.start, base + local.end}});
    };

    for (const auto& re : impl_->terms) {
        detail::for_each_match(lowered, re, [&](Span s) {
            if (text::letter_bounded(lowered, s)) record(terms, Constraint::CredentialActionCooccurrence, s);
        });
    }
    if (impl_->has_verbs) {
        detail::for_each_match(lowered, impl_->verbs, [&](Span s) {
            if (text::letter_bounded(lowered, s)) record(verbs, Constraint::CredentialActionCooccurrence, s);
        });
    }
    std::vector<Constraint> triggered;
    if (!terms.empty() && !verbs.empty()) {
        triggered.push_back(Constraint::CredentialActionCooccurrence);
        evidence.insert(evidence.end(), terms.begin(), terms.end());
        evidence.insert(evidence.end(), verbs.begin(), verbs.end());
    }
    const std::size_t before_injection = evidence.size();
    for (const auto& re : impl_->injection) {
        detail::for_each_match(lowered, re, [&](Span s) { record(evidence, Constraint::PromptInjection, s); });
    }
    if (evidence.size() > before_injection) triggered.push_back(Constraint::PromptInjection);
    const std::size_t before_social = evidence.size();
    for (const auto& re : impl_->social) {
        detail::for_each_match(lowered, re, [&](Span s) { record(evidence, Constraint::SocialEngineering, s); });
    }
    if (evidence.size() > before_social) triggered.push_back(Constraint::SocialEngineering);

    if (triggered.empty()) return std::nullopt;
    std::stable_sort(evidence.begin(), evidence.end(), [](const ConstraintEvidence& a, const ConstraintEvidence& b) {
        if (a.constraint != b.constraint) return a.constraint < b.constraint;
        return a.span < b.span;
    });
    evidence.erase(std::unique(evidence.begin(), evidence.end()), evidence.end());
    return NLFinding{window, std::move(triggered), std::move(evidence)};
}

std::optional<NLFinding> evaluate_constraints(const SemanticWindow& window, const ConstraintRules& rules) {
    return ConstraintEvaluator(rules).evaluate(window);
}

std::vector<NLFinding> analyze_nl(const SkillBundle& bundle, const std::vector<CredentialMatch>& nl_matches,
                                  const ConstraintEvaluator& evaluator) {
    std::vector<NLFinding> out;
    for (const auto& doc : bundle.nl_documents) {
        std::vector<CredentialMatch> mine;
        for (const auto& m : nl_matches) {
            if (m.file == doc.relative_path) mine.push_back(m);
        }
        if (mine.empty()) continue;
        for (const auto& w : build_windows(doc, mine)) {
            if (auto f = evaluator.evaluate(w)) out.push_back(std::move(*f));
        }
    }
    return out;
}

bool retain_skill_nl(const SkillBundle& /*bundle*/, const std::vector<NLFinding>& findings) { return !findings.empty(); }

}  // namespace skillscan
