#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sentry/graphs.hpp"
#include "sentry/judge.hpp"
#include "sentry/provenance.hpp"
#include "sentry/trace_model.hpp"

namespace sentry {

enum class Verdict { allow, block };

enum class Reason {
    BENIGN_PATH,
    ATTACK_PATH,
    AMBIGUOUS_JUDGE_PASS,
    AMBIGUOUS_JUDGE_FAIL,
    UNSEEN_JUDGE_PASS,
    UNSEEN_JUDGE_FAIL,
    JUDGE_ERROR_BLOCK,
    RETRIEVAL_ALLOW,
};

std::string reason_to_string(Reason r);

/// Allow/block verdict for one event plus the evidence that produced it.
struct Decision {
    Verdict verdict = Verdict::allow;
    Reason reason = Reason::RETRIEVAL_ALLOW;
    std::optional<StructuralVerdict> structural;
    std::optional<JudgeVerdict> judge;
    int event_index = 0;
    bool post_block = false;  // replay-mode audit flag

    std::string to_json() const;
};

struct SessionState {
    std::string session_id;
    std::string user_prompt;
    std::vector<ToolCallEvent> events;
    std::vector<Decision> decisions;
};

/// Evaluate one proposed tool call. Retrieval tools are allowed
/// unconditionally (recorded, never judged). Action tools are classified
/// against the graph; ambiguous/unseen flows defer to the judge. Judge
/// errors fail closed. The event and decision are appended to the session
/// on return.
Decision evaluate(SessionState& session, const ToolCallEvent& proposed,
                  const FunctionalityGraphSet& graph, const ToolRegistry& registry,
                  JudgeBackend& judge, const AttributionConfig& attribution = {});

enum class TraceOutcome { success, utility_blocked, attack_blocked, attack_succeeded, no_actions };

struct ReplayResult {
    std::vector<Decision> decisions;  // one per event, aligned by index
    TraceOutcome outcome = TraceOutcome::no_actions;
};

/// Feed a whole trace through evaluate(). Utility traces succeed iff
/// every action decision is allow; attack traces are blocked iff every
/// injected action decision is block. Replay is non-destructive: events
/// after a blocked injected action still replay, flagged post_block.
ReplayResult replay_trace(const ExecutionTrace& trace, const FunctionalityGraphSet& graph,
                          const ToolRegistry& registry, JudgeBackend& judge,
                          const AttributionConfig& attribution = {});

}  // namespace sentry
