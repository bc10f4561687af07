#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eqperf {

struct RuleStat {
    int rule_id = 0;
    int64_t activations = 0;    // fires across all mutants (from stats.json)
    int64_t confirmed_bugs = 0; // confirmed reports whose mutant used the rule
};

// Aggregates a findings directory produced by a fuzzing run: activation
// counters from stats.json plus per-rule counts over reports/*.json.
std::vector<RuleStat> rule_stats(const std::filesystem::path& findings_dir);

// How often rules fired together in the mutants behind confirmed reports.
// Diagonal entries count reports that used the rule at all.
struct CoOccurrence {
    std::vector<int> rule_ids;
    std::vector<std::vector<int64_t>> counts;
};

CoOccurrence rule_cooccurrence(const std::filesystem::path& findings_dir);

std::string rule_stats_table(const std::vector<RuleStat>& stats);
std::string cooccurrence_table(const CoOccurrence& co);

}  // namespace eqperf
