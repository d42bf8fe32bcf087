#pragma once

// Ranking metrics and the evaluation protocols (next-item, period-item,
// next-scene), user-length stratification, and representation export.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dspnet/data.hpp"
#include "dspnet/model.hpp"

namespace dspnet::eval {

enum class Task { kNextItem, kPeriodItem, kNextScene };

Task task_from_string(const std::string& s);
std::string task_to_string(Task t);

struct EvalOptions {
    std::vector<std::size_t> ks = {5, 10};
    // Recall denominator |relevant| (false) or min(|relevant|, k) (true).
    bool recall_denominator_min_k = false;
    // Rank over the whole vocabulary instead of the example's candidate set.
    bool full_vocab = false;
};

struct GroupMetrics {
    std::map<std::size_t, double> recall;  // k -> value
    std::map<std::size_t, double> ndcg;
    std::size_t num_users = 0;
};

struct MetricsReport {
    std::string task;
    GroupMetrics overall;
    std::map<std::string, GroupMetrics> groups;  // low / medium / high
};

double recall_at_k(const std::vector<int>& ranked, const std::set<int>& relevant,
                   std::size_t k, bool denominator_min_k = false);
double ndcg_at_k(const std::vector<int>& ranked, const std::set<int>& relevant,
                 std::size_t k);

// Candidate ids sorted by score descending, ties by ascending id.
std::vector<int> rank_candidates(const model::DualModel& m,
                                 const data::LabeledExample& ex, Task task,
                                 bool full_vocab = false);

MetricsReport evaluate(const model::DualModel& m, const data::Dataset& ds, Task task,
                       const EvalOptions& opts = {});

// Tercile split by history length; returns index sets in ascending-length
// order: {low, medium, high}.
struct LengthGroups {
    std::vector<std::size_t> low, medium, high;
};
LengthGroups group_by_length(const data::Dataset& ds);

std::string metrics_to_json(const MetricsReport& r);

// One JSON line per user: {"user", "group", "z": [z_scene ++ z_item]}.
void export_representations(const model::DualModel& m, const data::Dataset& ds,
                            const std::string& path);

}  // namespace dspnet::eval
