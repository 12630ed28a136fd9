#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skillscan/report.hpp"

using namespace skillscan;
namespace fs = std::filesystem;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitFindings = 1;
constexpr int kExitError = 2;

// Flag value, else the environment variable, else empty.
std::string config_path(const std::string& flag, const char* env) {
    if (!flag.empty()) return flag;
    const char* v = std::getenv(env);
    return v ? std::string(v) : std::string();
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw IoError("cannot write " + out);
    f << text;
}

// Array of labels, or an object keyed by item id.
std::vector<std::string> read_labels(const fs::path& path, std::vector<std::string>* keys) {
    const auto doc = read_json(path);
    std::vector<std::string> labels;
    if (doc.is_array()) {
        for (const auto& v : doc) labels.push_back(v.get<std::string>());
    } else if (doc.is_object()) {
        for (const auto& [k, v] : doc.items()) {
            if (keys) keys->push_back(k);
            labels.push_back(v.get<std::string>());
        }
    } else {
        throw InputError(path.string() + ": labels must be an array or an object");
    }
    return labels;
}

struct ScanOptions {
    std::string corpus, dict, rules, sinks, signatures, traces, ledger, out;
    std::string format = "json";
    bool serial = false;
    int threads = 0;
};

int run_scan(const ScanOptions& o) {
    const auto format = parse_format(o.format);
    ScanConfig cfg = ScanConfig::defaults();
    if (auto p = config_path(o.dict, "SKILLSCAN_DICT"); !p.empty()) {
        cfg.dictionary = KeywordDictionary::load(p, cfg.dictionary);
        cfg.rules = ConstraintRules::defaults(cfg.dictionary);
    }
    if (auto p = config_path(o.rules, "SKILLSCAN_RULES"); !p.empty()) cfg.rules = ConstraintRules::load(p, cfg.rules);
    if (auto p = config_path(o.sinks, "SKILLSCAN_SINKS"); !p.empty()) cfg.code = CodeConfig::load(p, cfg.code);
    if (auto p = config_path(o.signatures, "SKILLSCAN_SIGNATURES"); !p.empty()) {
        cfg.signatures = SignatureConfig::load(p, cfg.signatures);
    }

    const CorpusSnapshot snapshot = load_corpus(o.corpus);
    ScanInputs inputs;
    if (!o.traces.empty()) {
        if (!fs::is_directory(o.traces)) throw IoError("trace directory not found: " + o.traces);
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(o.traces)) {
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            Trace t = load_trace(f);
            const std::string id = t.skill_id;
            if (!inputs.traces.emplace(id, std::move(t)).second) throw InputError("two traces for skill '" + id + "'");
        }
    }
    std::vector<VerdictRecord> ledger;
    if (auto p = config_path(o.ledger, "SKILLSCAN_LEDGER"); !p.empty() && fs::exists(p)) {
        VerdictLedger l(p);
        ledger = l.records();
        inputs.verdicts = effective_verdicts(ledger);
    }

    const Scanner scanner(cfg);
    const CorpusScan scan =
        o.serial ? scan_corpus_serial(snapshot, scanner, inputs) : scan_corpus_parallel(snapshot, scanner, inputs, o.threads);
    const Report report = build_report(scan, cfg.digests(), ledger);
    write_text(o.out, emit(report, format));
    return report.issues.empty() ? kExitClean : kExitFindings;
}

int run_report(const std::string& path, const std::string& fmt, const std::string& out) {
    const auto format = parse_format(fmt);
    const Report report = load_report(path);
    write_text(out, emit(report, format));
    return report.issues.empty() ? kExitClean : kExitFindings;
}

int run_classify(const std::string& path, const std::string& ledger_flag, const std::string& reviewer) {
    const Trace trace = load_trace(path);
    const TraceClassification c = classify_trace(trace);
    nlohmann::json out = {{"skill_id", trace.skill_id},
                          {"b_count", c.profile.b_count},
                          {"a_count", c.profile.a_count},
                          {"timed_out", c.profile.timed_out},
                          {"profile_class", c.profile_class},
                          {"retained", c.retained},
                          {"verdict", c.verdict}};
    if (auto p = config_path(ledger_flag, "SKILLSCAN_LEDGER"); !p.empty()) {
        VerdictRecord r;
        r.skill_id = trace.skill_id;
        r.profile_class = c.profile_class;
        r.verdict = c.verdict;
        r.reviewer = reviewer;
        r.timestamp = utc_now();
        VerdictLedger(p).append(r);
    }
    std::cout << out.dump(2) << "\n";
    return c.retained ? kExitFindings : kExitClean;
}

int run_verdict(const std::string& skill_id, const std::string& intent_s, const std::string& reviewer,
                const std::string& ledger_flag, const std::string& class_s) {
    const Intent intent = parse_intent(intent_s);
    const auto p = config_path(ledger_flag, "SKILLSCAN_LEDGER");
    if (p.empty()) throw ArgumentError("verdict needs --ledger or SKILLSCAN_LEDGER");
    VerdictLedger ledger(p);
    std::optional<ProfileClass> cls;
    if (!class_s.empty()) {
        cls = nlohmann::json(class_s).get<ProfileClass>();
        if (nlohmann::json(*cls).get<std::string>() != class_s) throw ArgumentError("unknown profile class '" + class_s + "'");
    } else if (fs::exists(p)) {
        const auto eff = ledger.effective();
        if (auto it = eff.find(skill_id); it != eff.end()) cls = it->second.profile_class;
    }
    if (!cls) throw InputError("no profile class recorded for '" + skill_id + "'; run classify-trace or pass --class");
    const Routing routing = route_verdict(*cls, intent);
    if (routing.warning) std::cerr << "warning: " << *routing.warning << "\n";
    VerdictRecord r;
    r.skill_id = skill_id;
    r.profile_class = *cls;
    r.intent = intent;
    r.verdict = routing.verdict;
    r.reviewer = reviewer;
    r.timestamp = utc_now();
    ledger.append(r);
    std::cout << nlohmann::json(r).dump(2) << "\n";
    return kExitClean;
}

int run_kappa(const std::string& a, const std::string& b) {
    std::vector<std::string> ka, kb;
    const auto la = read_labels(a, &ka);
    const auto lb = read_labels(b, &kb);
    if (ka != kb) throw InputError("label files cover different items");
    std::cout << std::setprecision(6) << std::fixed << cohens_kappa(la, lb) << "\n";
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Credential leakage scanner for agent skills"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    ScanOptions scan;
    auto* scan_cmd = app.add_subcommand("scan", "Scan a skill corpus and emit a report");
    scan_cmd->add_option("corpus", scan.corpus, "Corpus directory (manifest, single skill, or skill directories)")
        ->required()
        ->check(CLI::ExistingDirectory);
    scan_cmd->add_option("--dict", scan.dict, "Keyword dictionary JSON (env SKILLSCAN_DICT)");
    scan_cmd->add_option("--rules", scan.rules, "NL constraint rules JSON (env SKILLSCAN_RULES)");
    scan_cmd->add_option("--sinks", scan.sinks, "Code analyzer config JSON (env SKILLSCAN_SINKS)");
    scan_cmd->add_option("--signatures", scan.signatures, "Pattern signature config JSON (env SKILLSCAN_SIGNATURES)");
    scan_cmd->add_option("--traces", scan.traces, "Directory of execution traces (*.json)");
    scan_cmd->add_option("--ledger", scan.ledger, "Verdict ledger (env SKILLSCAN_LEDGER)");
    scan_cmd->add_option("--out", scan.out, "Output file (default stdout)");
    scan_cmd->add_option("--format", scan.format, "json|summary|interchange");
    scan_cmd->add_flag("--serial", scan.serial, "Scan skills one after another");
    scan_cmd->add_option("--threads", scan.threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

    std::string trace_path, classify_ledger, classify_reviewer = "dynamic";
    auto* classify_cmd = app.add_subcommand("classify-trace", "Classify one execution trace");
    classify_cmd->add_option("trace", trace_path, "Trace JSON")->required()->check(CLI::ExistingFile);
    classify_cmd->add_option("--ledger", classify_ledger, "Append the result to this ledger (env SKILLSCAN_LEDGER)");
    classify_cmd->add_option("--reviewer", classify_reviewer, "Reviewer name recorded in the ledger");

    std::string v_skill, v_intent, v_reviewer, v_ledger, v_class;
    auto* verdict_cmd = app.add_subcommand("verdict", "Record a reviewer intent and routed verdict");
    verdict_cmd->add_option("skill-id", v_skill, "Skill id")->required();
    verdict_cmd->add_option("--intent", v_intent, "declared|undeclared|deliberate")->required();
    verdict_cmd->add_option("--reviewer", v_reviewer, "Reviewer name")->required();
    verdict_cmd->add_option("--ledger", v_ledger, "Verdict ledger (env SKILLSCAN_LEDGER)");
    verdict_cmd->add_option("--class", v_class, "Profile class when the ledger has none");

    std::string r_path, r_format = "summary", r_out;
    auto* report_cmd = app.add_subcommand("report", "Render a saved JSON report");
    report_cmd->add_option("report", r_path, "Report JSON")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--format", r_format, "json|summary|interchange");
    report_cmd->add_option("--out", r_out, "Output file (default stdout)");

    std::size_t population = 0;
    double confidence = 0.95, margin = 0.05, proportion = 0.5;
    auto* sample_cmd = app.add_subcommand("sample", "Required sample size with finite population correction");
    sample_cmd->add_option("--population", population, "Population size")->required();
    sample_cmd->add_option("--confidence", confidence, "Confidence level");
    sample_cmd->add_option("--margin", margin, "Margin of error");
    sample_cmd->add_option("--proportion", proportion, "Expected proportion");

    std::string kappa_a, kappa_b;
    auto* kappa_cmd = app.add_subcommand("kappa", "Cohen's kappa between two label files");
    kappa_cmd->add_option("labels-a", kappa_a)->required()->check(CLI::ExistingFile);
    kappa_cmd->add_option("labels-b", kappa_b)->required()->check(CLI::ExistingFile);

    std::string m_skill, m_env_file;
    std::vector<std::string> m_params;
    std::uint64_t m_seed = 0;
    auto* mock_cmd = app.add_subcommand("mock", "Generate mock credentials for a skill");
    mock_cmd->add_option("skill-id", m_skill, "Skill id")->required();
    mock_cmd->add_option("--param", m_params, "Declared runtime parameter (repeatable)");
    mock_cmd->add_option("--seed", m_seed, "Generator seed");
    mock_cmd->add_option("--env-file", m_env_file, "Also write the config-file credentials as .env");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitClean : kExitError;
    }

    try {
        if (*scan_cmd) return run_scan(scan);
        if (*classify_cmd) return run_classify(trace_path, classify_ledger, classify_reviewer);
        if (*verdict_cmd) return run_verdict(v_skill, v_intent, v_reviewer, v_ledger, v_class);
        if (*report_cmd) return run_report(r_path, r_format, r_out);
        if (*sample_cmd) {
            std::cout << required_sample_size(population, confidence, margin, proportion) << "\n";
            return kExitClean;
        }
        if (*kappa_cmd) return run_kappa(kappa_a, kappa_b);
        if (*mock_cmd) {
            const auto creds = generate_mock_credentials(m_skill, m_params, m_seed);
            if (!m_env_file.empty()) write_text(m_env_file, render_env_file(creds));
            std::cout << nlohmann::json(creds).dump(2) << "\n";
            return kExitClean;
        }
    } catch (const Error& e) {
        std::cerr << "skillscan: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "skillscan: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
