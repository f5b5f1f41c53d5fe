#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sentry/trace_model.hpp"

namespace sentry {

/// The trusted-inputs-only view handed to the intent-alignment judge.
/// Retrieval outputs, argument values, and final responses are not
/// representable here; only tool names and the original user prompt.
struct JudgeRequest {
    std::string user_prompt;
    std::vector<std::string> tool_names_so_far;
    std::string proposed_tool;
    std::set<std::string> read_only_tools;
    std::set<std::string> high_risk_tools;

    /// "tool_a, tool_b, proposed" as sent to the judge.
    std::string tools_line() const;
    std::string to_json() const;
};

enum class JudgeScore { safe = 0, drift = 1 };

enum class JudgeBackendKind { stub, gateway, always_safe, always_drift };

struct JudgeVerdict {
    JudgeScore score = JudgeScore::safe;
    std::string rationale;
    JudgeBackendKind backend = JudgeBackendKind::stub;
};

/// Deterministic stand-in for the LLM judge: per-suite high-risk tool set
/// plus trigger phrases whose presence in the user prompt marks a
/// high-risk tool as requested.
struct StubRuleTable {
    std::string suite_name;
    std::set<std::string> high_risk_tools;  // defaults to registry action tools
    std::map<std::string, std::vector<std::string>> triggers;  // tool -> phrases

    static StubRuleTable defaults_for(const ToolRegistry& registry);
    static StubRuleTable parse(const std::string& bytes, const ToolRegistry& registry);
};

/// Build the judge request from the trusted session context. Events'
/// outputs and argument values never cross this boundary.
JudgeRequest build_request(const std::string& user_prompt,
                           const std::vector<std::string>& tool_history,
                           const std::string& proposed_tool, const ToolRegistry& registry,
                           const std::set<std::string>& high_risk_override = {});

/// score = drift iff the proposed tool is high-risk and none of its
/// trigger phrases appears (case-insensitively) in the user prompt.
/// Unrequested retrieval tools are always safe.
JudgeVerdict judge_stub(const JudgeRequest& req, const StubRuleTable& rules);

struct GatewayConfig {
    std::string url;      // SENTRY_JUDGE_URL
    std::string model;    // SENTRY_JUDGE_MODEL
    std::string api_key;  // SENTRY_JUDGE_KEY
    int timeout_seconds = 30;

    static GatewayConfig from_env();
};

/// Render the intent-alignment system prompt with the suite's tool lists
/// substituted into the template slots.
std::string render_judge_prompt(const JudgeRequest& req);

/// Parse a completion: optional <think>...</think> block, then a single
/// standalone digit. Digits inside the think block are ignored. Throws
/// UnparseableVerdict when no terminal digit is found.
JudgeVerdict parse_gateway_response(const std::string& body);

/// One HTTP POST per request; errors (timeout, unparseable) surface as
/// exceptions and map to BLOCK downstream.
JudgeVerdict judge_gateway(const JudgeRequest& req, const GatewayConfig& config);

/// Pluggable backend used by the engine.
class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual JudgeVerdict judge(const JudgeRequest& req) = 0;
};

class StubJudge : public JudgeBackend {
public:
    explicit StubJudge(StubRuleTable rules) : rules_(std::move(rules)) {}
    JudgeVerdict judge(const JudgeRequest& req) override { return judge_stub(req, rules_); }

private:
    StubRuleTable rules_;
};

class GatewayJudge : public JudgeBackend {
public:
    explicit GatewayJudge(GatewayConfig config) : config_(std::move(config)) {}
    JudgeVerdict judge(const JudgeRequest& req) override { return judge_gateway(req, config_); }

private:
    GatewayConfig config_;
};

/// Constant-verdict judge; used for oracle bracketing in evaluation.
class FixedJudge : public JudgeBackend {
public:
    explicit FixedJudge(JudgeScore score) : score_(score) {}
    JudgeVerdict judge(const JudgeRequest&) override {
        return {score_, "fixed",
                score_ == JudgeScore::safe ? JudgeBackendKind::always_safe
                                           : JudgeBackendKind::always_drift};
    }

private:
    JudgeScore score_;
};

}  // namespace sentry
