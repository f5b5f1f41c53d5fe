#include <benchmark/benchmark.h>

#include "sentry/engine.hpp"
#include "sentry/graphs.hpp"
#include "sentry/provenance.hpp"
#include "sentry/synth.hpp"

namespace {

sentry::ToolRegistry banking_registry() {
    sentry::ToolRegistry r;
    r.suite_name = "banking";
    r.retrieval_tools = {"get_balance",           "get_scheduled_transactions",
                         "get_most_recent_transactions", "get_user_info",
                         "get_iban",              "read_file"};
    r.action_tools = {"send_money", "schedule_transaction", "update_scheduled_transaction",
                      "update_password", "update_user_info"};
    return r;
}

void bench_extract_flow(benchmark::State& state) {
    const auto reg = banking_registry();
    const auto corpus = sentry::generate_mini_suite(reg, 32, 32, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sentry::extract_flow(corpus[i++ % corpus.size()], reg));
    }
}
BENCHMARK(bench_extract_flow);

void bench_learn(benchmark::State& state) {
    const auto reg = banking_registry();
    const auto corpus = sentry::generate_mini_suite(reg, 64, 64, 1);
    std::vector<sentry::TraceFlow> benign, attack;
    for (const auto& t : corpus) {
        (t.label == sentry::Label::utility ? benign : attack)
            .push_back(sentry::extract_flow(t, reg));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(sentry::learn(benign, attack, reg));
    }
}
BENCHMARK(bench_learn);

void bench_classify_event(benchmark::State& state) {
    const auto reg = banking_registry();
    const auto corpus = sentry::generate_mini_suite(reg, 64, 64, 1);
    std::vector<sentry::TraceFlow> benign, attack;
    std::vector<sentry::FlowEvent> events;
    for (const auto& t : corpus) {
        auto flow = sentry::extract_flow(t, reg);
        for (const auto& e : flow.events) events.push_back(e);
        (t.label == sentry::Label::utility ? benign : attack).push_back(std::move(flow));
    }
    const auto graph = sentry::learn(benign, attack, reg).graph;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sentry::classify_event(events[i++ % events.size()], graph));
    }
}
BENCHMARK(bench_classify_event);

void bench_replay_trace(benchmark::State& state) {
    const auto reg = banking_registry();
    const auto corpus = sentry::generate_mini_suite(reg, 64, 64, 1);
    std::vector<sentry::TraceFlow> benign, attack;
    for (const auto& t : corpus) {
        (t.label == sentry::Label::utility ? benign : attack)
            .push_back(sentry::extract_flow(t, reg));
    }
    const auto graph = sentry::learn(benign, attack, reg).graph;
    sentry::FixedJudge judge(sentry::JudgeScore::safe);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            sentry::replay_trace(corpus[i++ % corpus.size()], graph, reg, judge));
    }
}
BENCHMARK(bench_replay_trace);

}  // namespace

BENCHMARK_MAIN();
