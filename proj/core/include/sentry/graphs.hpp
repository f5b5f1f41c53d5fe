#pragma once

#include <compare>
#include <set>
#include <string>
#include <vector>

#include "sentry/provenance.hpp"
#include "sentry/trace_model.hpp"

namespace sentry {

enum class PatternKind { ret_to_action, action_to_action, arg_source };

/// One learned pattern. For ret_to_action the key is the canonical
/// rendering of the retrieval-context list ("['a', 'b']") and the value is
/// the action name; for action_to_action the key is the predecessor action
/// and the value the action; for arg_source the key is "tool.arg" and the
/// value a source label.
struct PatternKey {
    PatternKind kind;
    std::string key;
    std::string value;

    auto operator<=>(const PatternKey&) const = default;
};

/// Render a sorted retrieval-context list as "['a', 'b']".
std::string render_context_key(const std::vector<std::string>& sorted_context);
std::vector<std::string> parse_context_key(const std::string& rendered);

/// Decompose a flow event into its pattern set: one ret_to_action key, an
/// action_to_action key iff a previous action exists, and one arg_source
/// key per (argument, source) pair.
std::vector<PatternKey> event_patterns(const FlowEvent& event);

enum class Partition { benign, ambiguous, attack, none };

enum class StructuralClass { benign, ambiguous, unseen, attack };

std::string structural_class_to_string(StructuralClass c);

struct StructuralVerdict {
    StructuralClass verdict = StructuralClass::unseen;
    std::vector<PatternKey> evidence;  // triggering patterns
};

/// The three-partition functionality graphs for one suite. Immutable
/// after learn(); concurrent lookups need no synchronization.
class FunctionalityGraphSet {
public:
    std::string suite_name;
    std::set<PatternKey> benign;
    std::set<PatternKey> ambiguous;
    std::set<PatternKey> attack;
    std::set<std::string> action_tools;
    std::set<std::string> retrieval_tools;

    Partition partition_of(const PatternKey& p) const;
};

struct LearnResult {
    FunctionalityGraphSet graph;
    bool empty_benign_warning = false;
};

/// Two-phase learning. Phase 1 inserts every pattern from benign flows
/// into the benign partition. Phase 2 walks attack-flow patterns: a
/// pattern already in benign moves to ambiguous, an unknown pattern goes
/// to attack, a pattern already in ambiguous is left alone. Partitions
/// are pairwise disjoint on return.
LearnResult learn(const std::vector<TraceFlow>& benign_flows,
                  const std::vector<TraceFlow>& attack_flows, const ToolRegistry& registry);

/// Classify one event against the graph. Precedence across the event's
/// patterns: attack > ambiguous > unseen > benign.
StructuralVerdict classify_event(const FlowEvent& event, const FunctionalityGraphSet& graph);

/// Byte-deterministic serialization in the three-part graph-file shape
/// (top-level "utility" / "ambiguous" / "attack" objects plus the tool
/// lists), sorted keys and sorted value arrays.
std::string serialize_graph(const FunctionalityGraphSet& graph);
FunctionalityGraphSet deserialize_graph(const std::string& bytes);

/// Deterministic stratified subsample: ceil(fraction * n) traces per
/// label, without replacement, under the given seed.
std::vector<ExecutionTrace> coverage_subset(const std::vector<ExecutionTrace>& traces,
                                            double fraction, std::uint64_t seed);

}  // namespace sentry
