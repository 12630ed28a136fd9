#include <algorithm>
#include <exception>
#include <set>

#include <omp.h>

#include "skillscan/pipeline.hpp"
#include "skillscan/text.hpp"

namespace skillscan {

ScanConfig ScanConfig::defaults() {
    ScanConfig c;
    c.dictionary = default_dictionary();
    c.rules = ConstraintRules::defaults(c.dictionary);
    c.code = CodeConfig::defaults();
    c.signatures = SignatureConfig::defaults();
    return c;
}

std::map<std::string, std::string> ScanConfig::digests() const {
    return {{"dictionary", dictionary.digest()},
            {"nl_rules", rules.digest()},
            {"code", code.digest()},
            {"signatures", signatures.digest()}};
}

bool SkillScan::affected() const {
    return !issues.empty() && verdict && (*verdict == Verdict::Vulnerable || *verdict == Verdict::Malicious);
}

void to_json(nlohmann::json& j, const SkillScan& s) {
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& f : s.skipped) skipped.push_back({{"path", f.relative_path}, {"reason", f.reason}});
    j = {{"skill_id", s.skill_id},
         {"category", s.category},
         {"languages", s.languages},
         {"credential_categories", s.credential_categories},
         {"nl_match_count", s.nl_match_count},
         {"code_match_count", s.code_match_count},
         {"keyword_flagged", s.keyword_flagged},
         {"nl_retained", s.nl_retained},
         {"code_retained", s.code_retained},
         {"dynamic_retained", s.dynamic_retained},
         {"profile_class", s.profile_class},
         {"flagged", s.flagged},
         {"verdict", s.verdict},
         {"verdict_source", s.verdict_source},
         {"surface", s.surface},
         {"nl_findings", s.nl_findings},
         {"sink_findings", s.sink_findings},
         {"obfuscation_findings", s.obfuscation_findings},
         {"diagnostics", s.diagnostics},
         {"skipped", skipped},
         {"issues", s.issues}};
}

void from_json(const nlohmann::json& j, SkillScan& s) {
    s.skill_id = j.at("skill_id").get<std::string>();
    s.category = j.at("category").get<std::optional<std::string>>();
    s.languages = j.at("languages").get<std::vector<Language>>();
    s.credential_categories = j.at("credential_categories").get<std::vector<CredentialCategory>>();
    s.nl_match_count = j.at("nl_match_count").get<std::size_t>();
    s.code_match_count = j.at("code_match_count").get<std::size_t>();
    s.keyword_flagged = j.at("keyword_flagged").get<bool>();
    s.nl_retained = j.at("nl_retained").get<bool>();
    s.code_retained = j.at("code_retained").get<bool>();
    s.dynamic_retained = j.at("dynamic_retained").get<std::optional<bool>>();
    s.profile_class = j.at("profile_class").get<std::optional<ProfileClass>>();
    s.flagged = j.at("flagged").get<bool>();
    s.verdict = j.at("verdict").get<std::optional<Verdict>>();
    s.verdict_source = j.at("verdict_source").get<std::string>();
    s.surface = j.at("surface").get<std::optional<AttackSurface>>();
    s.nl_findings = j.at("nl_findings").get<std::vector<NLFinding>>();
    s.sink_findings = j.at("sink_findings").get<std::vector<SinkFinding>>();
    s.obfuscation_findings = j.at("obfuscation_findings").get<std::vector<ObfuscationFinding>>();
    s.diagnostics = j.at("diagnostics").get<std::vector<Diagnostic>>();
    s.skipped.clear();
    for (const auto& f : j.at("skipped")) {
        s.skipped.push_back({f.at("path").get<std::string>(), f.at("reason").get<std::string>()});
    }
    s.issues = j.at("issues").get<std::vector<IssueRecord>>();
}

Scanner::Scanner(ScanConfig config)
    : config_(std::move(config)),
      evaluator_(config_.rules),
      analyzer_(config_.code),
      engine_(config_.signatures, config_.code.placeholder_patterns) {}

SkillEvidence Scanner::collect(const SkillBundle& bundle, const Trace* trace) const {
    SkillEvidence ev;
    ev.skill_id = bundle.skill_id;
    ev.nl_documents = bundle.nl_documents;
    const BundleFlags flags = flag_bundle(bundle, config_.dictionary);
    ev.nl_matches = flags.nl_matches;
    ev.nl_findings = analyze_nl(bundle, ev.nl_matches, evaluator_);
    for (const auto& file : bundle.source_files) ev.files.push_back(analyze_source(file, config_.dictionary, analyzer_));
    if (trace) {
        if (trace->skill_id != bundle.skill_id) {
            throw ArgumentError("trace for " + trace->skill_id + " given to skill " + bundle.skill_id);
        }
        ev.trace = *trace;
        ev.hits = detect_markers(trace->events, trace->credentials);
    }
    return ev;
}

SkillScan Scanner::scan_bundle(const SkillBundle& bundle, const Trace* trace, const VerdictRecord* ledger_verdict) const {
    SkillScan s;
    s.skill_id = bundle.skill_id;
    s.category = bundle.category;
    s.skipped = bundle.skipped;

    // Keyword flagging looks at raw text in both streams, before masking. A bundle without a
    // single match is excluded from everything downstream.
    s.keyword_flagged = !flag_bundle(bundle, config_.dictionary).excluded;
    if (!s.keyword_flagged) {
        if (ledger_verdict) {
            s.verdict = ledger_verdict->verdict;
            s.verdict_source = "ledger";
        }
        return s;
    }

    SkillEvidence ev = collect(bundle, trace);

    std::set<Language> languages;
    std::set<CredentialCategory> categories;
    for (const auto& m : ev.nl_matches) categories.insert(m.category);
    s.nl_match_count = ev.nl_matches.size();
    for (const auto& fa : ev.files) {
        languages.insert(fa.view.language);
        s.code_match_count += fa.matches.size();
        for (const auto& m : fa.matches) categories.insert(m.category);
        s.sink_findings.insert(s.sink_findings.end(), fa.sink_findings.begin(), fa.sink_findings.end());
        s.obfuscation_findings.insert(s.obfuscation_findings.end(), fa.obfuscation_findings.begin(),
                                      fa.obfuscation_findings.end());
        s.diagnostics.insert(s.diagnostics.end(), fa.diagnostics.begin(), fa.diagnostics.end());
    }
    s.languages.assign(languages.begin(), languages.end());
    s.credential_categories.assign(categories.begin(), categories.end());
    sort_by_severity(s.sink_findings);
    s.nl_findings = ev.nl_findings;

    s.nl_retained = retain_skill_nl(bundle, ev.nl_findings);
    s.code_retained = retain_skill_code(bundle, s.sink_findings, s.obfuscation_findings);

    std::vector<IssueRecord> issues = engine_.assign(ev);
    s.flagged = s.keyword_flagged && (s.nl_retained || s.code_retained || !issues.empty());

    if (trace) {
        const auto profile = aggregate_profile(ev.hits, bundle.skill_id, trace->timeouts);
        s.profile_class = classify_profile(profile);
        s.dynamic_retained = retain_dynamic(profile);
    }
    if (ledger_verdict) {
        s.verdict = ledger_verdict->verdict;
        s.verdict_source = "ledger";
    } else if (s.profile_class) {
        s.verdict = route_verdict(*s.profile_class, std::nullopt).verdict;
        s.verdict_source = "dynamic";
    } else if (!issues.empty()) {
        const bool malicious = std::any_of(issues.begin(), issues.end(), [](const IssueRecord& r) {
            return r.family() == PatternFamily::Malicious;
        });
        s.verdict = malicious ? Verdict::Malicious : Verdict::Vulnerable;
        s.verdict_source = "static";
    }
    s.issues = s.verdict ? apply_verdict_context(issues, *s.verdict) : std::vector<IssueRecord>{};

    // Line/column regions for issues anchored in a bundle file.
    for (auto& r : s.issues) {
        for (const auto& doc : bundle.nl_documents) {
            if (doc.relative_path == r.file) r.region = region_of(doc.text, r.span);
        }
        for (const auto& src : bundle.source_files) {
            if (src.relative_path == r.file) r.region = region_of(src.text, r.span);
        }
    }
    s.surface = classify_attack_surface(ev, s.issues);
    return s;
}

namespace {

SkillScan scan_one(const SkillBundle& bundle, const Scanner& scanner, const ScanInputs& inputs) {
    const auto t = inputs.traces.find(bundle.skill_id);
    const auto v = inputs.verdicts.find(bundle.skill_id);
    return scanner.scan_bundle(bundle, t == inputs.traces.end() ? nullptr : &t->second,
                               v == inputs.verdicts.end() ? nullptr : &v->second);
}

void check_inputs(const CorpusSnapshot& snapshot, const ScanInputs& inputs) {
    std::set<std::string> ids;
    for (const auto& b : snapshot.bundles) ids.insert(b.skill_id);
    for (const auto& [id, trace] : inputs.traces) {
        if (!ids.count(id)) throw InputError("trace for unknown skill '" + id + "'");
    }
}

}  // namespace

CorpusScan scan_corpus_serial(const CorpusSnapshot& snapshot, const Scanner& scanner, const ScanInputs& inputs) {
    validate_snapshot(snapshot);
    check_inputs(snapshot, inputs);
    CorpusScan out;
    out.timestamp = snapshot.timestamp;
    out.population_size = snapshot.population_size;
    out.skills.reserve(snapshot.bundles.size());
    for (const auto& b : snapshot.bundles) out.skills.push_back(scan_one(b, scanner, inputs));
    return out;
}

CorpusScan scan_corpus_parallel(const CorpusSnapshot& snapshot, const Scanner& scanner, const ScanInputs& inputs,
                                int threads) {
    validate_snapshot(snapshot);
    check_inputs(snapshot, inputs);
    CorpusScan out;
    out.timestamp = snapshot.timestamp;
    out.population_size = snapshot.population_size;
    const auto n = static_cast<std::ptrdiff_t>(snapshot.bundles.size());
    out.skills.resize(snapshot.bundles.size());
    std::vector<std::exception_ptr> errors(snapshot.bundles.size());
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out.skills[static_cast<std::size_t>(i)] = scan_one(snapshot.bundles[static_cast<std::size_t>(i)], scanner, inputs);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    // Same error the serial scan would raise first.
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace skillscan
