#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sentry/trace_model.hpp"

namespace sentry {

/// Source label attached to an action argument when no candidate text
/// explains its value at any matching tier.
inline constexpr const char* kUnattributed = "unattributed";

/// Source label for values traced back to the original user request.
inline constexpr const char* kUserPromptSource = "user_prompt";

/// The abstraction of one action call: the accumulated retrieval context,
/// the previous action (if any), and per-argument source attribution.
struct FlowEvent {
    std::string action_name;
    std::vector<std::string> retrieval_context;  // sorted, deduplicated
    std::optional<std::string> prev_action;
    std::map<std::string, std::set<std::string>> arg_sources;

    bool operator==(const FlowEvent&) const = default;
};

/// A trace reduced to its execution logic; flow_key is a stable digest
/// used for cross-run deduplication (FNV-1a 64 over the canonical JSON
/// rendering of the events).
struct TraceFlow {
    std::string suite_name;
    std::vector<FlowEvent> events;
    std::string flow_key;

    bool operator==(const TraceFlow&) const = default;
};

struct AttributionConfig {
    double fuzzy_threshold = 0.85;
    // Candidate tokens shorter than this are ignored by the containment
    // tier; short tokens attribute almost anything.
    std::size_t min_containment_token = 4;
};

/// One FlowEvent per action event, in trace order. Retrieval context
/// accumulates every retrieval call seen earlier in the trace.
TraceFlow extract_flow(const ExecutionTrace& trace, const ToolRegistry& registry,
                       const AttributionConfig& config = {});

/// Matching cascade for argument provenance. Tiers, highest priority
/// first: exact equality, format-aware (IBAN / email token present
/// verbatim in a candidate), substring containment, fuzzy token-window
/// similarity. All candidates matching at the winning tier are returned;
/// {"unattributed"} if nothing matches.
std::set<std::string> attribute_sources(
    const std::string& arg_value, const std::string& user_prompt,
    const std::vector<std::pair<std::string, std::string>>& prior_retrievals,
    const AttributionConfig& config = {});

/// Which cascade tier produced the attribution; exposed for corpus
/// instrumentation.
enum class AttributionTier { exact, format_aware, containment, fuzzy, none };

std::set<std::string> attribute_sources_with_tier(
    const std::string& arg_value, const std::string& user_prompt,
    const std::vector<std::pair<std::string, std::string>>& prior_retrievals,
    const AttributionConfig& config, AttributionTier& tier_out);

std::string canonical_flow_json(const std::vector<FlowEvent>& events);
std::string flow_digest(const std::vector<FlowEvent>& events);

bool looks_like_iban(const std::string& s);
bool looks_like_email(const std::string& s);

}  // namespace sentry
