// sentry: learn, classify, enforce, splice, synth, and eval over
// agent execution-trace corpora.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sentry/engine.hpp"
#include "sentry/evalharness.hpp"
#include "sentry/graphs.hpp"
#include "sentry/judge.hpp"
#include "sentry/provenance.hpp"
#include "sentry/synth.hpp"
#include "sentry/trace_model.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAssert = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sentry::Error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path);
    if (!out) throw sentry::Error("cannot write " + path);
    out << bytes;
}

sentry::ToolRegistry load_registry(const std::string& path) {
    return sentry::parse_registry(slurp(path));
}

std::unique_ptr<sentry::JudgeBackend> make_judge_backend(const std::string& kind,
                                                         const sentry::ToolRegistry& registry,
                                                         const std::string& rules_path) {
    if (kind == "gateway") {
        return std::make_unique<sentry::GatewayJudge>(sentry::GatewayConfig::from_env());
    }
    sentry::StubRuleTable rules;
    if (!rules_path.empty()) {
        rules = sentry::StubRuleTable::parse(slurp(rules_path), registry);
    } else {
        rules = sentry::StubRuleTable::defaults_for(registry);
        for (const auto& t : registry.action_tools) rules.triggers[t] = {t};
    }
    return std::make_unique<sentry::StubJudge>(std::move(rules));
}

int cmd_learn(const std::string& traces_path, const std::string& registry_path,
              const std::string& out_path, double fraction, std::uint64_t seed) {
    const auto registry = load_registry(registry_path);
    auto corpus = sentry::load_corpus(traces_path, registry);
    if (fraction < 1.0) corpus = sentry::coverage_subset(corpus, fraction, seed);

    std::vector<sentry::TraceFlow> benign, attack;
    for (const auto& t : corpus) {
        if (t.label == sentry::Label::utility) benign.push_back(extract_flow(t, registry));
        else if (t.label == sentry::Label::attack) attack.push_back(extract_flow(t, registry));
    }
    const auto result = sentry::learn(benign, attack, registry);
    if (result.empty_benign_warning)
        std::cerr << "warning: no benign traces; graph has attack partitions only\n";
    spit(out_path, sentry::serialize_graph(result.graph));
    std::cerr << "learned graph from " << corpus.size() << " traces -> " << out_path << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& traces_path, const std::string& registry_path,
             const std::string& config_path, const std::string& csv_path, bool per_seed,
             const std::vector<std::string>& asserts) {
    const auto registry = load_registry(registry_path);
    const auto corpus = sentry::load_corpus(traces_path, registry);
    sentry::EvalConfig config;
    if (!config_path.empty()) config = sentry::EvalConfig::parse(slurp(config_path));

    const auto result = sentry::run_sweep(corpus, registry, config);
    const auto& rows = per_seed ? result.per_seed_rows : result.rows;
    std::cout << sentry::report(result.rows, sentry::ReportFormat::table);
    if (!csv_path.empty()) spit(csv_path, sentry::report(rows, sentry::ReportFormat::csv));

    for (const auto& a : asserts) {
        if (a == "full-coverage-misclassif-zero") {
            for (const auto& r : result.rows) {
                if (r.coverage == 1.0 && r.fg_misclassif_pct != 0.0) {
                    std::cerr << "assertion failed: misclassification "
                              << r.fg_misclassif_pct << "% at full coverage (" << r.suite
                              << ")\n";
                    return kExitAssert;
                }
            }
        } else {
            std::cerr << "unknown assertion '" << a << "'\n";
            return kExitUsage;
        }
    }
    return kExitOk;
}

int cmd_classify(const std::string& graph_path, const std::string& registry_path,
                 const std::string& trace_path) {
    const auto registry = load_registry(registry_path);
    const auto graph = sentry::deserialize_graph(slurp(graph_path));
    const auto traces = sentry::load_corpus(trace_path, registry);
    for (const auto& t : traces) {
        const auto flow = sentry::extract_flow(t, registry);
        for (const auto& ev : flow.events) {
            const auto v = sentry::classify_event(ev, graph);
            std::cout << t.trace_id << "\t" << ev.action_name << "\t"
                      << sentry::structural_class_to_string(v.verdict) << "\n";
        }
    }
    return kExitOk;
}

int cmd_enforce(const std::string& graph_path, const std::string& registry_path,
                const std::string& judge_kind, const std::string& rules_path,
                const std::string& audit_path) {
    const auto registry = load_registry(registry_path);
    const auto graph = sentry::deserialize_graph(slurp(graph_path));
    auto judge = make_judge_backend(judge_kind, registry, rules_path);

    std::ofstream audit;
    if (!audit_path.empty()) audit.open(audit_path, std::ios::app);

    std::map<std::string, sentry::SessionState> sessions;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json req;
        try {
            req = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            nlohmann::ordered_json err{{"error", std::string("malformed JSON: ") + e.what()}};
            std::cout << err.dump() << std::endl;
            continue;
        }
        try {
            const std::string sid = req.at("session_id").get<std::string>();
            auto& session = sessions[sid];
            session.session_id = sid;
            if (session.user_prompt.empty() && req.contains("user_prompt"))
                session.user_prompt = req.at("user_prompt").get<std::string>();
            sentry::ToolCallEvent ev;
            ev.name = req.at("name").get<std::string>();
            if (!registry.contains(ev.name)) throw sentry::UnknownTool(ev.name);
            if (req.contains("args")) {
                for (const auto& [k, v] : req.at("args").items())
                    ev.args.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
            }
            ev.output = req.value("output", "");

            const sentry::Decision d =
                sentry::evaluate(session, ev, graph, registry, *judge);
            nlohmann::ordered_json resp = nlohmann::ordered_json::parse(d.to_json());
            resp["session_id"] = sid;
            std::cout << resp.dump() << std::endl;
            if (audit.is_open()) audit << resp.dump() << "\n" << std::flush;
            // Live mode terminates the session on first block; recovery is
            // the caller's concern.
            if (d.verdict == sentry::Verdict::block) sessions.erase(sid);
        } catch (const sentry::Error& e) {
            nlohmann::ordered_json err{{"error", e.what()}};
            std::cout << err.dump() << std::endl;
        }
    }
    return kExitOk;
}

int cmd_splice(const std::string& utility_path, const std::string& attack_path,
               const std::string& registry_path, const std::string& preambles_path,
               const std::string& out_path) {
    const auto registry = load_registry(registry_path);
    const auto utilities = sentry::load_corpus(utility_path, registry);
    const auto attacks = sentry::load_corpus(attack_path, registry);
    std::vector<std::string> preambles = sentry::default_preambles();
    if (!preambles_path.empty()) {
        preambles.clear();
        std::istringstream in(slurp(preambles_path));
        std::string p;
        while (std::getline(in, p)) {
            if (!p.empty()) preambles.push_back(p);
        }
    }
    const auto spliced = sentry::splice_grid(utilities, attacks, preambles, registry);
    std::ostringstream out;
    for (const auto& t : spliced) out << sentry::serialize_trace(t) << "\n";
    spit(out_path, out.str());
    std::cerr << "wrote " << spliced.size() << " spliced traces -> " << out_path << "\n";
    return kExitOk;
}

int cmd_synth(const std::string& registry_path, int n_utility, int n_attack, std::uint64_t seed,
              const std::string& out_path) {
    const auto registry = load_registry(registry_path);
    const auto traces = sentry::generate_mini_suite(registry, n_utility, n_attack, seed);
    std::ostringstream out;
    for (const auto& t : traces) out << sentry::serialize_trace(t) << "\n";
    spit(out_path, out.str());
    std::cerr << "wrote " << traces.size() << " traces -> " << out_path << "\n";
    return kExitOk;
}

int cmd_stats(const std::string& traces_path, const std::string& registry_path) {
    const auto registry = load_registry(registry_path);
    const auto corpus = sentry::load_corpus(traces_path, registry);
    const auto stats = sentry::validate_corpus(corpus, registry);
    nlohmann::ordered_json j;
    j["total"] = stats.total;
    j["utility"] = stats.utility_count;
    j["attack"] = stats.attack_count;
    j["unlabeled"] = stats.unlabeled_count;
    j["unique_flows"] = stats.unique_flows;
    j["per_suite"] = stats.per_suite;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Execution-provenance policy learning and enforcement for tool-calling agents"};
    app.require_subcommand(1);

    std::string traces, registry, out, graph, config, rules, audit, utility_path, attack_path,
        preambles_path, judge_kind = "stub", trace_path, csv_path;
    double fraction = 1.0;
    std::uint64_t seed = 1;
    int n_utility = 20, n_attack = 40;
    bool per_seed = false;
    std::vector<std::string> asserts;

    auto* learn = app.add_subcommand("learn", "Learn functionality graphs from a labeled corpus");
    learn->add_option("--traces", traces)->required();
    learn->add_option("--registry", registry)->required();
    learn->add_option("--out", out)->required();
    learn->add_option("--fraction", fraction);
    learn->add_option("--seed", seed);

    auto* eval = app.add_subcommand("eval", "Run the coverage-sweep evaluation");
    eval->add_option("--traces", traces)->required();
    eval->add_option("--registry", registry)->required();
    eval->add_option("--config", config);
    eval->add_option("--csv", csv_path);
    eval->add_flag("--per-seed", per_seed);
    eval->add_option("--assert", asserts);

    auto* classify = app.add_subcommand("classify", "Classify trace events against a graph");
    classify->add_option("--graph", graph)->required();
    classify->add_option("--registry", registry)->required();
    classify->add_option("--traces", trace_path)->required();

    auto* enforce = app.add_subcommand("enforce", "Stdio enforcement loop (JSONL in/out)");
    enforce->add_option("--graph", graph)->required();
    enforce->add_option("--registry", registry)->required();
    enforce->add_option("--judge", judge_kind)->check(CLI::IsMember({"stub", "gateway"}));
    enforce->add_option("--rules", rules);
    enforce->add_option("--audit", audit);

    auto* splice = app.add_subcommand("splice", "Splice attack traces onto utility carriers");
    splice->add_option("--utility", utility_path)->required();
    splice->add_option("--attack", attack_path)->required();
    splice->add_option("--registry", registry)->required();
    splice->add_option("--preambles", preambles_path);
    splice->add_option("--out", out)->required();

    auto* synth = app.add_subcommand("synth", "Generate a deterministic mini corpus");
    synth->add_option("--registry", registry)->required();
    synth->add_option("--n-utility", n_utility);
    synth->add_option("--n-attack", n_attack);
    synth->add_option("--seed", seed);
    synth->add_option("--out", out)->required();

    auto* stats = app.add_subcommand("stats", "Corpus composition and unique-flow counts");
    stats->add_option("--traces", traces)->required();
    stats->add_option("--registry", registry)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (learn->parsed()) return cmd_learn(traces, registry, out, fraction, seed);
        if (eval->parsed()) return cmd_eval(traces, registry, config, csv_path, per_seed, asserts);
        if (classify->parsed()) return cmd_classify(graph, registry, trace_path);
        if (enforce->parsed()) return cmd_enforce(graph, registry, judge_kind, rules, audit);
        if (splice->parsed())
            return cmd_splice(utility_path, attack_path, registry, preambles_path, out);
        if (synth->parsed()) return cmd_synth(registry, n_utility, n_attack, seed, out);
        if (stats->parsed()) return cmd_stats(traces, registry);
    } catch (const sentry::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
