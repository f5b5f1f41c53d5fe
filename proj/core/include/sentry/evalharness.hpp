#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentry/engine.hpp"
#include "sentry/graphs.hpp"
#include "sentry/judge.hpp"
#include "sentry/trace_model.hpp"

namespace sentry {

enum class PrevalenceSetting { as_is, balanced, deployment };

PrevalenceSetting prevalence_from_string(const std::string& s);

struct EvalConfig {
    std::vector<double> coverage_fractions = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    PrevalenceSetting setting = PrevalenceSetting::as_is;
    double deployment_ratio = 9.0;  // benign : attack
    JudgeBackendKind judge_backend = JudgeBackendKind::stub;

    static EvalConfig parse(const std::string& bytes);
};

struct MetricsRow {
    std::string suite;
    double coverage = 0.0;
    std::uint64_t seed = 0;  // meaningful only in per-seed rows
    double utility_pct = 0.0;
    double asr_pct = 0.0;
    double ambiguity_rate_pct = 0.0;
    double fg_misclassif_pct = 0.0;
    int n_traces = 0;
};

struct SweepResult {
    std::vector<MetricsRow> rows;           // averaged over seeds
    std::vector<MetricsRow> per_seed_rows;  // every (fraction, seed) cell
};

/// For each (fraction, seed): learn graphs on a stratified subset, replay
/// every trace through the engine, and compute Utility%, ASR%, ambiguity
/// rate, and structural-layer misclassification rate. Averaged rows keep
/// the arithmetic mean over seeds.
SweepResult run_sweep(const std::vector<ExecutionTrace>& corpus, const ToolRegistry& registry,
                      const EvalConfig& config, JudgeBackend* judge_override = nullptr);

/// as_is: identity. balanced: oversample utility traces with replacement
/// to match the attack count. deployment: oversample utility to the
/// configured benign:attack ratio.
std::vector<ExecutionTrace> apply_prevalence(const std::vector<ExecutionTrace>& corpus,
                                             PrevalenceSetting setting, double ratio,
                                             std::uint64_t seed);

enum class ReportFormat { csv, table };

std::string report(const std::vector<MetricsRow>& rows, ReportFormat format);

}  // namespace sentry
