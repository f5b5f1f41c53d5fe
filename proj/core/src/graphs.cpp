#include "sentry/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace sentry {

using ordered_json = nlohmann::ordered_json;

std::string render_context_key(const std::vector<std::string>& sorted_context) {
    std::string out = "[";
    for (std::size_t i = 0; i < sorted_context.size(); ++i) {
        if (i) out += ", ";
        out += "'" + sorted_context[i] + "'";
    }
    out += "]";
    return out;
}

std::vector<std::string> parse_context_key(const std::string& rendered) {
    if (rendered.size() < 2 || rendered.front() != '[' || rendered.back() != ']')
        throw SchemaViolation("bad context key rendering: " + rendered);
    std::vector<std::string> out;
    std::string body = rendered.substr(1, rendered.size() - 2);
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto open = body.find('\'', pos);
        if (open == std::string::npos) break;
        const auto close = body.find('\'', open + 1);
        if (close == std::string::npos)
            throw SchemaViolation("unterminated quote in context key: " + rendered);
        out.push_back(body.substr(open + 1, close - open - 1));
        pos = close + 1;
    }
    return out;
}

std::vector<PatternKey> event_patterns(const FlowEvent& event) {
    std::vector<PatternKey> out;
    out.push_back({PatternKind::ret_to_action, render_context_key(event.retrieval_context),
                   event.action_name});
    if (event.prev_action) {
        out.push_back({PatternKind::action_to_action, *event.prev_action, event.action_name});
    }
    for (const auto& [arg, sources] : event.arg_sources) {
        for (const auto& src : sources) {
            out.push_back({PatternKind::arg_source, event.action_name + "." + arg, src});
        }
    }
    return out;
}

Partition FunctionalityGraphSet::partition_of(const PatternKey& p) const {
    if (attack.count(p)) return Partition::attack;
    if (ambiguous.count(p)) return Partition::ambiguous;
    if (benign.count(p)) return Partition::benign;
    return Partition::none;
}

LearnResult learn(const std::vector<TraceFlow>& benign_flows,
                  const std::vector<TraceFlow>& attack_flows, const ToolRegistry& registry) {
    LearnResult result;
    auto& g = result.graph;
    g.suite_name = registry.suite_name;
    g.action_tools = registry.action_tools;
    g.retrieval_tools = registry.retrieval_tools;

    // Phase 1: every pattern from benign flows.
    for (const auto& flow : benign_flows) {
        for (const auto& ev : flow.events) {
            for (auto& p : event_patterns(ev)) g.benign.insert(std::move(p));
        }
    }
    // Phase 2: attack-flow patterns. Shared patterns migrate to ambiguous.
    for (const auto& flow : attack_flows) {
        for (const auto& ev : flow.events) {
            for (auto& p : event_patterns(ev)) {
                if (g.benign.count(p)) {
                    g.benign.erase(p);
                    g.ambiguous.insert(std::move(p));
                } else if (!g.ambiguous.count(p)) {
                    g.attack.insert(std::move(p));
                }
            }
        }
    }
    result.empty_benign_warning = benign_flows.empty();
    return result;
}

StructuralVerdict classify_event(const FlowEvent& event, const FunctionalityGraphSet& graph) {
    StructuralVerdict v;
    std::vector<PatternKey> unseen;
    std::vector<PatternKey> ambiguous;
    std::vector<PatternKey> attack;
    for (auto& p : event_patterns(event)) {
        switch (graph.partition_of(p)) {
            case Partition::attack: attack.push_back(std::move(p)); break;
            case Partition::ambiguous: ambiguous.push_back(std::move(p)); break;
            case Partition::none: unseen.push_back(std::move(p)); break;
            case Partition::benign: break;
        }
    }
    if (!attack.empty()) {
        v.verdict = StructuralClass::attack;
        v.evidence = std::move(attack);
    } else if (!ambiguous.empty()) {
        v.verdict = StructuralClass::ambiguous;
        v.evidence = std::move(ambiguous);
    } else if (!unseen.empty()) {
        v.verdict = StructuralClass::unseen;
        v.evidence = std::move(unseen);
    } else {
        v.verdict = StructuralClass::benign;
    }
    return v;
}

std::string structural_class_to_string(StructuralClass c) {
    switch (c) {
        case StructuralClass::benign: return "benign";
        case StructuralClass::ambiguous: return "ambiguous";
        case StructuralClass::unseen: return "unseen";
        case StructuralClass::attack: return "attack";
    }
    return "unseen";
}

namespace {

ordered_json partition_to_json(const std::set<PatternKey>& patterns) {
    std::map<std::string, std::set<std::string>> ret_to_action;
    std::map<std::string, std::set<std::string>> action_to_action;
    std::map<std::string, std::set<std::string>> arg_sources;
    for (const auto& p : patterns) {
        switch (p.kind) {
            case PatternKind::ret_to_action: ret_to_action[p.key].insert(p.value); break;
            case PatternKind::action_to_action: action_to_action[p.key].insert(p.value); break;
            case PatternKind::arg_source: arg_sources[p.key].insert(p.value); break;
        }
    }
    const auto emit = [](const std::map<std::string, std::set<std::string>>& m) {
        ordered_json j = ordered_json::object();
        for (const auto& [k, vals] : m) j[k] = vals;
        return j;
    };
    ordered_json j;
    j["cfg_ret_to_action"] = emit(ret_to_action);
    j["cfg_action_to_action"] = emit(action_to_action);
    j["dfg_arg_sources"] = emit(arg_sources);
    return j;
}

void partition_from_json(const ordered_json& j, const std::string& name,
                         const FunctionalityGraphSet& graph, std::set<PatternKey>& out) {
    if (!j.is_object()) throw SchemaViolation("partition '" + name + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        if (k != "cfg_ret_to_action" && k != "cfg_action_to_action" && k != "dfg_arg_sources")
            throw SchemaViolation("unknown key '" + k + "' in partition '" + name + "'");
    }
    const auto require_action = [&](const std::string& tool) {
        if (!graph.action_tools.count(tool))
            throw SchemaViolation("action tool '" + tool + "' absent from action_tools");
    };
    const auto require_retrieval = [&](const std::string& tool) {
        if (!graph.retrieval_tools.count(tool))
            throw SchemaViolation("retrieval tool '" + tool + "' absent from retrieval_tools");
    };
    if (j.contains("cfg_ret_to_action")) {
        for (const auto& [key, actions] : j.at("cfg_ret_to_action").items()) {
            for (const auto& tool : parse_context_key(key)) require_retrieval(tool);
            for (const auto& a : actions) {
                require_action(a.get<std::string>());
                out.insert({PatternKind::ret_to_action, key, a.get<std::string>()});
            }
        }
    }
    if (j.contains("cfg_action_to_action")) {
        for (const auto& [key, actions] : j.at("cfg_action_to_action").items()) {
            require_action(key);
            for (const auto& a : actions) {
                require_action(a.get<std::string>());
                out.insert({PatternKind::action_to_action, key, a.get<std::string>()});
            }
        }
    }
    if (j.contains("dfg_arg_sources")) {
        for (const auto& [key, sources] : j.at("dfg_arg_sources").items()) {
            const auto dot = key.find('.');
            if (dot == std::string::npos)
                throw SchemaViolation("dfg key '" + key + "' is not tool.arg");
            require_action(key.substr(0, dot));
            for (const auto& s : sources) {
                const std::string src = s.get<std::string>();
                if (src != kUserPromptSource && src != kUnattributed) require_retrieval(src);
                out.insert({PatternKind::arg_source, key, src});
            }
        }
    }
}

}  // namespace

std::string serialize_graph(const FunctionalityGraphSet& graph) {
    ordered_json j;
    j["utility"] = partition_to_json(graph.benign);
    j["ambiguous"] = partition_to_json(graph.ambiguous);
    j["attack"] = partition_to_json(graph.attack);
    j["action_tools"] = graph.action_tools;
    j["retrieval_tools"] = graph.retrieval_tools;
    return j.dump(2) + "\n";
}

FunctionalityGraphSet deserialize_graph(const std::string& bytes) {
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedJson(e.what());
    }
    if (!j.is_object()) throw SchemaViolation("graph file must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (k != "utility" && k != "ambiguous" && k != "attack" && k != "action_tools" &&
            k != "retrieval_tools" && k != "suite")
            throw SchemaViolation("unknown top-level key '" + k + "'");
    }
    FunctionalityGraphSet g;
    g.suite_name = j.value("suite", "");
    if (j.contains("action_tools"))
        for (const auto& t : j.at("action_tools")) g.action_tools.insert(t.get<std::string>());
    if (j.contains("retrieval_tools"))
        for (const auto& t : j.at("retrieval_tools")) g.retrieval_tools.insert(t.get<std::string>());
    if (j.contains("utility")) partition_from_json(j.at("utility"), "utility", g, g.benign);
    if (j.contains("ambiguous")) partition_from_json(j.at("ambiguous"), "ambiguous", g, g.ambiguous);
    if (j.contains("attack")) partition_from_json(j.at("attack"), "attack", g, g.attack);
    return g;
}

std::vector<ExecutionTrace> coverage_subset(const std::vector<ExecutionTrace>& traces,
                                            double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw Error("coverage fraction must be in (0, 1]");
    if (fraction == 1.0) return traces;

    std::map<Label, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < traces.size(); ++i) by_label[traces[i].label].push_back(i);

    std::vector<std::size_t> chosen;
    std::mt19937_64 rng(seed);
    for (auto& [label, indices] : by_label) {
        const auto k = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(indices.size())));
        std::shuffle(indices.begin(), indices.end(), rng);
        chosen.insert(chosen.end(), indices.begin(), indices.begin() + k);
    }
    std::sort(chosen.begin(), chosen.end());  // preserve corpus order
    std::vector<ExecutionTrace> out;
    out.reserve(chosen.size());
    for (auto i : chosen) out.push_back(traces[i]);
    return out;
}

}  // namespace sentry
