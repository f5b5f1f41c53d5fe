#pragma once

#include <string>
#include <vector>

#include "sentry/trace_model.hpp"

namespace sentry::testing {

inline ToolRegistry banking_registry() {
    ToolRegistry r;
    r.suite_name = "banking";
    r.retrieval_tools = {"get_balance",           "get_scheduled_transactions",
                         "get_most_recent_transactions", "get_user_info",
                         "get_iban",              "read_file"};
    r.action_tools = {"send_money", "schedule_transaction", "update_scheduled_transaction",
                      "update_password", "update_user_info"};
    return r;
}

inline ToolCallEvent event(std::string name,
                           std::vector<std::pair<std::string, std::string>> args = {},
                           std::string output = "") {
    ToolCallEvent e;
    e.name = std::move(name);
    e.args = std::move(args);
    e.output = std::move(output);
    return e;
}

inline ExecutionTrace trace(std::string id, Label label, std::string prompt,
                            std::vector<ToolCallEvent> events,
                            std::vector<int> injected = {}) {
    ExecutionTrace t;
    t.suite_name = "banking";
    t.trace_id = std::move(id);
    t.label = label;
    t.user_prompt = std::move(prompt);
    t.events = std::move(events);
    t.injected_action_indices = std::move(injected);
    for (int i = 0; i < static_cast<int>(t.events.size()); ++i) t.events[i].index = i;
    return t;
}

}  // namespace sentry::testing
