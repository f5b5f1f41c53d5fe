#include "sentry/trace_model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sentry/provenance.hpp"

namespace sentry {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string label_to_string(Label l) {
    switch (l) {
        case Label::utility: return "utility";
        case Label::attack: return "attack";
        case Label::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

Label label_from_string(const std::string& s) {
    if (s == "utility") return Label::utility;
    if (s == "attack") return Label::attack;
    if (s == "unlabeled") return Label::unlabeled;
    throw MalformedJson("unknown label '" + s + "'");
}

ToolRegistry parse_registry(const std::string& bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw MalformedJson(e.what());
    }
    if (!j.is_object() || !j.contains("suite") || !j.contains("retrieval_tools") ||
        !j.contains("action_tools")) {
        throw SchemaViolation("registry requires suite, retrieval_tools, action_tools");
    }
    ToolRegistry r;
    r.suite_name = j.at("suite").get<std::string>();
    for (const auto& t : j.at("retrieval_tools")) r.retrieval_tools.insert(t.get<std::string>());
    for (const auto& t : j.at("action_tools")) r.action_tools.insert(t.get<std::string>());
    for (const auto& t : r.retrieval_tools) {
        if (r.action_tools.count(t))
            throw SchemaViolation("tool '" + t + "' is both retrieval and action");
    }
    return r;
}

std::string serialize_registry(const ToolRegistry& registry) {
    ordered_json j;
    j["suite"] = registry.suite_name;
    j["retrieval_tools"] = registry.retrieval_tools;
    j["action_tools"] = registry.action_tools;
    return j.dump(2) + "\n";
}

namespace {

// Non-string arg values are canonicalized to their compact JSON text;
// provenance matching operates on strings.
std::string arg_value_to_string(const ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

// Parsed as ordered_json so argument order survives the round trip.
ExecutionTrace trace_from_json(const ordered_json& j, const ToolRegistry& registry) {
    if (!j.is_object()) throw MalformedJson("trace must be a JSON object");
    for (const char* req : {"suite", "trace_id", "label", "user_prompt", "events"}) {
        if (!j.contains(req)) throw MalformedJson(std::string("missing field '") + req + "'");
    }
    ExecutionTrace t;
    t.suite_name = j.at("suite").get<std::string>();
    t.trace_id = j.at("trace_id").get<std::string>();
    t.label = label_from_string(j.at("label").get<std::string>());
    t.user_prompt = j.at("user_prompt").get<std::string>();
    t.final_response = j.value("final_response", "");

    int idx = 0;
    for (const auto& ev : j.at("events")) {
        if (!ev.is_object() || !ev.contains("name"))
            throw MalformedJson("event missing 'name'");
        ToolCallEvent e;
        e.name = ev.at("name").get<std::string>();
        if (!registry.contains(e.name)) throw UnknownTool(e.name);
        if (ev.contains("args")) {
            std::set<std::string> seen;
            for (const auto& [k, v] : ev.at("args").items()) {
                if (!seen.insert(k).second) throw MalformedJson("duplicate arg key '" + k + "'");
                e.args.emplace_back(k, arg_value_to_string(v));
            }
        }
        e.output = ev.value("output", "");
        e.index = idx++;
        t.events.push_back(std::move(e));
    }
    if (j.contains("injected_action_indices")) {
        for (const auto& i : j.at("injected_action_indices"))
            t.injected_action_indices.push_back(i.get<int>());
    }

    const bool has_injected = !t.injected_action_indices.empty();
    if (has_injected != (t.label == Label::attack)) {
        throw LabelMismatch("injected_action_indices non-empty iff label is attack (trace " +
                            t.trace_id + ")");
    }
    for (int i : t.injected_action_indices) {
        if (i < 0 || i >= static_cast<int>(t.events.size()))
            throw LabelMismatch("injected index " + std::to_string(i) + " out of range");
        if (!registry.is_action(t.events[i].name))
            throw LabelMismatch("injected index " + std::to_string(i) +
                                " does not point at an action tool");
    }
    return t;
}

}  // namespace

ExecutionTrace parse_trace(const std::string& bytes, const ToolRegistry& registry) {
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const ordered_json::parse_error& e) {
        throw MalformedJson(e.what());
    }
    return trace_from_json(j, registry);
}

std::string serialize_trace(const ExecutionTrace& trace) {
    ordered_json j;
    j["suite"] = trace.suite_name;
    j["trace_id"] = trace.trace_id;
    j["label"] = label_to_string(trace.label);
    j["user_prompt"] = trace.user_prompt;
    j["events"] = ordered_json::array();
    for (const auto& e : trace.events) {
        ordered_json ev;
        ev["name"] = e.name;
        ev["args"] = ordered_json::object();
        for (const auto& [k, v] : e.args) ev["args"][k] = v;
        ev["output"] = e.output;
        j["events"].push_back(std::move(ev));
    }
    j["injected_action_indices"] = trace.injected_action_indices;
    j["final_response"] = trace.final_response;
    return j.dump();
}

std::vector<ExecutionTrace> parse_corpus_text(const std::string& bytes,
                                              const ToolRegistry& registry) {
    // Newline-agnostic: a single JSON object, or one object per line.
    std::vector<ExecutionTrace> out;
    const auto first = bytes.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return out;
    try {
        out.push_back(parse_trace(bytes, registry));
        return out;
    } catch (const MalformedJson&) {
        out.clear();
    }
    std::istringstream in(bytes);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_trace(line, registry));
        } catch (const MalformedJson& e) {
            throw MalformedJson("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ExecutionTrace> load_corpus(const std::string& path, const ToolRegistry& registry) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::recursive_directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension();
            if (ext == ".json" || ext == ".jsonl") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<ExecutionTrace> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw Error("cannot open " + f.string());
        std::stringstream buf;
        buf << in.rdbuf();
        auto traces = parse_corpus_text(buf.str(), registry);
        out.insert(out.end(), std::make_move_iterator(traces.begin()),
                   std::make_move_iterator(traces.end()));
    }
    return out;
}

CorpusStats validate_corpus(const std::vector<ExecutionTrace>& traces,
                            const ToolRegistry& registry) {
    CorpusStats stats;
    std::set<std::string> flow_keys;
    for (const auto& t : traces) {
        stats.total++;
        stats.per_suite[t.suite_name]++;
        switch (t.label) {
            case Label::utility: stats.utility_count++; break;
            case Label::attack: stats.attack_count++; break;
            case Label::unlabeled: stats.unlabeled_count++; break;
        }
        flow_keys.insert(extract_flow(t, registry).flow_key);
    }
    stats.unique_flows = static_cast<int>(flow_keys.size());
    return stats;
}

}  // namespace sentry
