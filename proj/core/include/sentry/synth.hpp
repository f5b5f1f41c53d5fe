#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sentry/trace_model.hpp"

namespace sentry {

/// Inputs to the conversation splicer: a utility trace whose first event
/// is a retrieval tool (the injection point), the attack trace whose
/// prompt becomes the payload, and a jailbreak preamble.
struct SpliceSpec {
    ExecutionTrace utility_trace;
    ExecutionTrace attack_trace;
    std::string preamble;
};

/// Default jailbreak preamble library; configurable via CLI.
std::vector<std::string> default_preambles();

/// Graft the attack trace onto the utility trace: keep utility events up
/// to and including the first retrieval event, append
/// "\n" + preamble + "\n" + attack prompt to that event's output, then
/// append the attack trace's events. Label attack, injected indices point
/// at the attack-origin action events. Throws SpliceUnsupported when the
/// utility trace has no retrieval event.
ExecutionTrace splice(const SpliceSpec& spec, const ToolRegistry& registry);

/// Full cartesian grid: every utility x attack x preamble combination.
std::vector<ExecutionTrace> splice_grid(const std::vector<ExecutionTrace>& utilities,
                                        const std::vector<ExecutionTrace>& attacks,
                                        const std::vector<std::string>& preambles,
                                        const ToolRegistry& registry);

/// Frequency matrix of observed tool transitions over a registry's tools.
struct TransitionMatrix {
    std::vector<std::string> tools;  // sorted domain
    std::map<std::pair<std::string, std::string>, std::uint64_t> counts;

    static TransitionMatrix from_registry(const ToolRegistry& registry);
    void record(const std::string& from, const std::string& to);
    std::uint64_t count(const std::string& from, const std::string& to) const;
};

/// Coverage-driven target selection: a uniformly random zero-count
/// transition if any exists, otherwise sampled with probability
/// proportional to 1/count. Deterministic under seed.
std::pair<std::string, std::string> least_covered_transition(const TransitionMatrix& matrix,
                                                             std::uint64_t seed);

/// Deterministic desk-scale corpus: template-driven utility traces
/// (read->act, read->read->act, act-only, read->verify->act) plus spliced
/// attack traces, with argument values chosen so every provenance tier is
/// exercised. Requires >=2 retrieval and >=2 action tools.
std::vector<ExecutionTrace> generate_mini_suite(const ToolRegistry& registry, int n_utility,
                                                int n_attack, std::uint64_t seed);

}  // namespace sentry
