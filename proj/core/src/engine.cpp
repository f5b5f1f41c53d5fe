#include "sentry/engine.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace sentry {

std::string reason_to_string(Reason r) {
    switch (r) {
        case Reason::BENIGN_PATH: return "BENIGN_PATH";
        case Reason::ATTACK_PATH: return "ATTACK_PATH";
        case Reason::AMBIGUOUS_JUDGE_PASS: return "AMBIGUOUS_JUDGE_PASS";
        case Reason::AMBIGUOUS_JUDGE_FAIL: return "AMBIGUOUS_JUDGE_FAIL";
        case Reason::UNSEEN_JUDGE_PASS: return "UNSEEN_JUDGE_PASS";
        case Reason::UNSEEN_JUDGE_FAIL: return "UNSEEN_JUDGE_FAIL";
        case Reason::JUDGE_ERROR_BLOCK: return "JUDGE_ERROR_BLOCK";
        case Reason::RETRIEVAL_ALLOW: return "RETRIEVAL_ALLOW";
    }
    return "RETRIEVAL_ALLOW";
}

std::string Decision::to_json() const {
    nlohmann::ordered_json j;
    j["verdict"] = verdict == Verdict::allow ? "allow" : "block";
    j["reason"] = reason_to_string(reason);
    j["event_index"] = event_index;
    nlohmann::ordered_json evidence = nlohmann::ordered_json::array();
    if (structural) {
        for (const auto& p : structural->evidence) {
            nlohmann::ordered_json e;
            switch (p.kind) {
                case PatternKind::ret_to_action: e["kind"] = "cfg_ret_to_action"; break;
                case PatternKind::action_to_action: e["kind"] = "cfg_action_to_action"; break;
                case PatternKind::arg_source: e["kind"] = "dfg_arg_sources"; break;
            }
            e["key"] = p.key;
            e["value"] = p.value;
            evidence.push_back(std::move(e));
        }
        j["structural"] = structural_class_to_string(structural->verdict);
    }
    j["evidence"] = std::move(evidence);
    if (judge) {
        j["judge_score"] = judge->score == JudgeScore::safe ? 0 : 1;
        j["judge_rationale"] = judge->rationale;
    }
    if (post_block) j["post_block"] = true;
    return j.dump();
}

namespace {

// Rebuild the flow context for the proposed action from the session's
// already-accumulated events.
FlowEvent make_flow_event(const SessionState& session, const ToolCallEvent& proposed,
                          const ToolRegistry& registry, const AttributionConfig& attribution) {
    std::set<std::string> context;
    std::vector<std::pair<std::string, std::string>> retrievals;
    std::optional<std::string> prev_action;
    for (const auto& ev : session.events) {
        if (registry.is_retrieval(ev.name)) {
            context.insert(ev.name);
            retrievals.emplace_back(ev.name, ev.output);
        } else if (registry.is_action(ev.name)) {
            prev_action = ev.name;
        }
    }
    FlowEvent fe;
    fe.action_name = proposed.name;
    fe.retrieval_context.assign(context.begin(), context.end());
    fe.prev_action = prev_action;
    for (const auto& [arg_name, arg_value] : proposed.args) {
        fe.arg_sources[arg_name] =
            attribute_sources(arg_value, session.user_prompt, retrievals, attribution);
    }
    return fe;
}

}  // namespace

Decision evaluate(SessionState& session, const ToolCallEvent& proposed,
                  const FunctionalityGraphSet& graph, const ToolRegistry& registry,
                  JudgeBackend& judge, const AttributionConfig& attribution) {
    Decision d;
    d.event_index = static_cast<int>(session.events.size());

    if (registry.is_retrieval(proposed.name)) {
        d.verdict = Verdict::allow;
        d.reason = Reason::RETRIEVAL_ALLOW;
    } else {
        const FlowEvent fe = make_flow_event(session, proposed, registry, attribution);
        StructuralVerdict sv = classify_event(fe, graph);
        d.structural = sv;
        switch (sv.verdict) {
            case StructuralClass::benign:
                d.verdict = Verdict::allow;
                d.reason = Reason::BENIGN_PATH;
                break;
            case StructuralClass::attack:
                d.verdict = Verdict::block;
                d.reason = Reason::ATTACK_PATH;
                break;
            case StructuralClass::ambiguous:
            case StructuralClass::unseen: {
                std::vector<std::string> history;
                for (const auto& ev : session.events) history.push_back(ev.name);
                const JudgeRequest req =
                    build_request(session.user_prompt, history, proposed.name, registry);
                const bool ambiguous = sv.verdict == StructuralClass::ambiguous;
                try {
                    const JudgeVerdict jv = judge.judge(req);
                    d.judge = jv;
                    if (jv.score == JudgeScore::safe) {
                        d.verdict = Verdict::allow;
                        d.reason = ambiguous ? Reason::AMBIGUOUS_JUDGE_PASS
                                             : Reason::UNSEEN_JUDGE_PASS;
                    } else {
                        d.verdict = Verdict::block;
                        d.reason = ambiguous ? Reason::AMBIGUOUS_JUDGE_FAIL
                                             : Reason::UNSEEN_JUDGE_FAIL;
                    }
                } catch (const Error&) {
                    // Fail closed on any judge error.
                    d.verdict = Verdict::block;
                    d.reason = Reason::JUDGE_ERROR_BLOCK;
                }
                break;
            }
        }
    }
    session.events.push_back(proposed);
    session.events.back().index = d.event_index;
    session.decisions.push_back(d);
    return d;
}

ReplayResult replay_trace(const ExecutionTrace& trace, const FunctionalityGraphSet& graph,
                          const ToolRegistry& registry, JudgeBackend& judge,
                          const AttributionConfig& attribution) {
    ReplayResult result;
    SessionState session;
    session.session_id = trace.trace_id;
    session.user_prompt = trace.user_prompt;

    const std::set<int> injected(trace.injected_action_indices.begin(),
                                 trace.injected_action_indices.end());
    bool blocked_injected = false;
    for (const auto& ev : trace.events) {
        Decision d = evaluate(session, ev, graph, registry, judge, attribution);
        if (blocked_injected) {
            d.post_block = true;
            session.decisions.back().post_block = true;
        }
        if (d.verdict == Verdict::block && injected.count(d.event_index)) blocked_injected = true;
        result.decisions.push_back(std::move(d));
    }

    bool any_action = false;
    bool all_actions_allowed = true;
    for (const auto& d : result.decisions) {
        if (d.reason == Reason::RETRIEVAL_ALLOW) continue;
        any_action = true;
        if (d.verdict == Verdict::block) all_actions_allowed = false;
    }
    if (trace.label == Label::attack) {
        bool all_injected_blocked = !injected.empty();
        for (int i : injected) {
            if (result.decisions[static_cast<std::size_t>(i)].verdict != Verdict::block)
                all_injected_blocked = false;
        }
        result.outcome =
            all_injected_blocked ? TraceOutcome::attack_blocked : TraceOutcome::attack_succeeded;
    } else if (!any_action) {
        result.outcome = TraceOutcome::no_actions;
    } else {
        result.outcome =
            all_actions_allowed ? TraceOutcome::success : TraceOutcome::utility_blocked;
    }
    return result;
}

}  // namespace sentry
