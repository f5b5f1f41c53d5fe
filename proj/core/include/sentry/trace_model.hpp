#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sentry/errors.hpp"

namespace sentry {

/// Per-suite classification of tool names into retrieval vs action sets.
/// Retrieval tools read state; action tools have external side effects.
struct ToolRegistry {
    std::string suite_name;
    std::set<std::string> retrieval_tools;
    std::set<std::string> action_tools;

    bool is_retrieval(const std::string& name) const { return retrieval_tools.count(name) != 0; }
    bool is_action(const std::string& name) const { return action_tools.count(name) != 0; }
    bool contains(const std::string& name) const { return is_retrieval(name) || is_action(name); }
};

enum class Label { utility, attack, unlabeled };

std::string label_to_string(Label l);
Label label_from_string(const std::string& s);

/// One tool invocation inside a trace. `output` holds the (untrusted)
/// retrieved content; empty for pure actions.
struct ToolCallEvent {
    std::string name;
    std::vector<std::pair<std::string, std::string>> args;  // ordered, unique keys
    std::string output;
    int index = 0;

    bool operator==(const ToolCallEvent&) const = default;
};

/// A record of how the agent responded to a single user query: the trusted
/// prompt plus the ordered tool-call events, with a corpus label.
struct ExecutionTrace {
    std::string suite_name;
    std::string trace_id;
    Label label = Label::unlabeled;
    std::string user_prompt;
    std::vector<ToolCallEvent> events;
    std::vector<int> injected_action_indices;  // attack traces only
    std::string final_response;

    bool operator==(const ExecutionTrace&) const = default;
};

struct CorpusStats {
    std::map<std::string, int> per_suite;
    int utility_count = 0;
    int attack_count = 0;
    int unlabeled_count = 0;
    int total = 0;
    int unique_flows = 0;
};

ToolRegistry parse_registry(const std::string& bytes);
std::string serialize_registry(const ToolRegistry& registry);

/// Parse one trace from its JSON wire format and validate it against the
/// registry. Throws MalformedJson, UnknownTool, or LabelMismatch.
ExecutionTrace parse_trace(const std::string& bytes, const ToolRegistry& registry);
std::string serialize_trace(const ExecutionTrace& trace);

/// Parse a corpus file: either a single JSON object or .jsonl with one
/// trace per line. Blank lines are skipped.
std::vector<ExecutionTrace> parse_corpus_text(const std::string& bytes, const ToolRegistry& registry);

/// Load every .json/.jsonl file under `path` (a file or a directory).
std::vector<ExecutionTrace> load_corpus(const std::string& path, const ToolRegistry& registry);

/// Per-label and per-suite counts plus the number of unique execution
/// flows (traces deduplicated by their abstracted flow). Reports only,
/// rejects nothing.
CorpusStats validate_corpus(const std::vector<ExecutionTrace>& traces, const ToolRegistry& registry);

}  // namespace sentry
