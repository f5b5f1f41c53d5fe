#include "sentry/provenance.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sentry {

namespace {

// Case-fold and collapse runs of whitespace to single spaces.
std::string normalize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!in_space && !out.empty()) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> tokens_of(const std::string& s) {
    std::vector<std::string> toks;
    std::istringstream in(s);
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double normalized_similarity(const std::string& a, const std::string& b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

bool fuzzy_match(const std::string& arg, const std::string& candidate, double threshold) {
    const std::string narg = normalize(arg);
    const std::string ncand = normalize(candidate);
    if (narg.empty()) return false;
    const auto arg_toks = tokens_of(narg);
    const auto cand_toks = tokens_of(ncand);
    const std::size_t k = arg_toks.size();
    if (k == 0 || cand_toks.size() < k) {
        return normalized_similarity(narg, ncand) >= threshold;
    }
    // Sliding windows of equal token length over the candidate.
    for (std::size_t i = 0; i + k <= cand_toks.size(); ++i) {
        std::string window = cand_toks[i];
        for (std::size_t j = 1; j < k; ++j) window += " " + cand_toks[i + j];
        if (normalized_similarity(narg, window) >= threshold) return true;
    }
    return false;
}

// Containment tier. Raw containment for arg -> candidate, token-bounded
// for candidate -> arg.
bool containment_match(const std::string& arg, const std::string& candidate,
                       std::size_t min_token) {
    if (!arg.empty() && candidate.find(arg) != std::string::npos) return true;
    const auto arg_toks = tokens_of(arg);
    for (const auto& t : tokens_of(candidate)) {
        if (t.size() < min_token) continue;
        if (std::find(arg_toks.begin(), arg_toks.end(), t) != arg_toks.end()) return true;
    }
    return false;
}

bool format_aware_match(const std::string& arg, const std::string& candidate) {
    if (!looks_like_iban(arg) && !looks_like_email(arg)) return false;
    return candidate.find(arg) != std::string::npos;
}

}  // namespace

bool looks_like_iban(const std::string& s) {
    // ISO 13616 shape: 2 letters, 2 digits, 11-30 alphanumerics.
    if (s.size() < 15 || s.size() > 34) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) ||
        !std::isalpha(static_cast<unsigned char>(s[1])))
        return false;
    if (!std::isdigit(static_cast<unsigned char>(s[2])) ||
        !std::isdigit(static_cast<unsigned char>(s[3])))
        return false;
    for (std::size_t i = 4; i < s.size(); ++i) {
        if (!std::isalnum(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

bool looks_like_email(const std::string& s) {
    // RFC-5322-lite: local@domain.tld, no spaces.
    const auto at = s.find('@');
    if (at == std::string::npos || at == 0 || at + 1 >= s.size()) return false;
    if (s.find('@', at + 1) != std::string::npos) return false;
    const std::string domain = s.substr(at + 1);
    const auto dot = domain.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= domain.size()) return false;
    for (unsigned char c : s) {
        if (std::isspace(c)) return false;
    }
    return true;
}

std::set<std::string> attribute_sources_with_tier(
    const std::string& arg_value, const std::string& user_prompt,
    const std::vector<std::pair<std::string, std::string>>& prior_retrievals,
    const AttributionConfig& config, AttributionTier& tier_out) {
    // Empty values attribute to the user prompt; no flow occurred.
    if (arg_value.empty()) {
        tier_out = AttributionTier::exact;
        return {kUserPromptSource};
    }
    std::vector<std::pair<std::string, const std::string*>> candidates;
    candidates.emplace_back(kUserPromptSource, &user_prompt);
    for (const auto& [tool, output] : prior_retrievals) candidates.emplace_back(tool, &output);

    const auto collect = [&](auto&& pred) {
        std::set<std::string> hits;
        for (const auto& [label, text] : candidates) {
            if (pred(*text)) hits.insert(label);
        }
        return hits;
    };

    if (auto hits = collect([&](const std::string& c) { return c == arg_value; }); !hits.empty()) {
        tier_out = AttributionTier::exact;
        return hits;
    }
    if (auto hits = collect([&](const std::string& c) { return format_aware_match(arg_value, c); });
        !hits.empty()) {
        tier_out = AttributionTier::format_aware;
        return hits;
    }
    if (auto hits = collect([&](const std::string& c) {
            return containment_match(arg_value, c, config.min_containment_token);
        });
        !hits.empty()) {
        tier_out = AttributionTier::containment;
        return hits;
    }
    if (auto hits = collect(
            [&](const std::string& c) { return fuzzy_match(arg_value, c, config.fuzzy_threshold); });
        !hits.empty()) {
        tier_out = AttributionTier::fuzzy;
        return hits;
    }
    tier_out = AttributionTier::none;
    return {kUnattributed};
}

std::set<std::string> attribute_sources(
    const std::string& arg_value, const std::string& user_prompt,
    const std::vector<std::pair<std::string, std::string>>& prior_retrievals,
    const AttributionConfig& config) {
    AttributionTier tier = AttributionTier::none;
    return attribute_sources_with_tier(arg_value, user_prompt, prior_retrievals, config, tier);
}

TraceFlow extract_flow(const ExecutionTrace& trace, const ToolRegistry& registry,
                       const AttributionConfig& config) {
    TraceFlow flow;
    flow.suite_name = trace.suite_name;
    std::set<std::string> context;  // accumulated retrieval tool names
    std::vector<std::pair<std::string, std::string>> retrievals;
    std::optional<std::string> prev_action;
    for (const auto& ev : trace.events) {
        if (registry.is_retrieval(ev.name)) {
            context.insert(ev.name);
            retrievals.emplace_back(ev.name, ev.output);
            continue;
        }
        FlowEvent fe;
        fe.action_name = ev.name;
        fe.retrieval_context.assign(context.begin(), context.end());
        fe.prev_action = prev_action;
        for (const auto& [arg_name, arg_value] : ev.args) {
            fe.arg_sources[arg_name] =
                attribute_sources(arg_value, trace.user_prompt, retrievals, config);
        }
        prev_action = ev.name;
        flow.events.push_back(std::move(fe));
    }
    flow.flow_key = flow_digest(flow.events);
    return flow;
}

std::string canonical_flow_json(const std::vector<FlowEvent>& events) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : events) {
        nlohmann::ordered_json j;
        j["action"] = e.action_name;
        j["ctx"] = e.retrieval_context;
        j["prev"] = e.prev_action ? nlohmann::ordered_json(*e.prev_action)
                                  : nlohmann::ordered_json(nullptr);
        nlohmann::ordered_json args = nlohmann::ordered_json::object();
        for (const auto& [name, sources] : e.arg_sources) args[name] = sources;
        j["args"] = std::move(args);
        arr.push_back(std::move(j));
    }
    return arr.dump();
}

std::string flow_digest(const std::vector<FlowEvent>& events) {
    // FNV-1a 64 over the canonical JSON of the events; stable across runs.
    const std::string text = canonical_flow_json(events);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace sentry
