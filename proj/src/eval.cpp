#include "dspnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dspnet/objectives.hpp"

namespace dspnet::eval {

using nlohmann::json;

Task task_from_string(const std::string& s) {
    if (s == "next-item") return Task::kNextItem;
    if (s == "period-item") return Task::kPeriodItem;
    if (s == "next-scene") return Task::kNextScene;
    throw ConfigError("unknown task: " + s);
}

std::string task_to_string(Task t) {
    switch (t) {
        case Task::kNextItem: return "next-item";
        case Task::kPeriodItem: return "period-item";
        case Task::kNextScene: return "next-scene";
    }
    throw ConfigError("unknown task");
}

double recall_at_k(const std::vector<int>& ranked, const std::set<int>& relevant,
                   std::size_t k, bool denominator_min_k) {
    if (relevant.empty()) throw ConfigError("recall_at_k: empty relevant set");
    if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        hits += relevant.count(ranked[i]);
    }
    const std::size_t denom =
        denominator_min_k ? std::min(relevant.size(), k) : relevant.size();
    return static_cast<double>(hits) / static_cast<double>(denom);
}

double ndcg_at_k(const std::vector<int>& ranked, const std::set<int>& relevant,
                 std::size_t k) {
    if (relevant.empty()) throw ConfigError("ndcg_at_k: empty relevant set");
    if (k < 1) throw ConfigError("ndcg_at_k: k must be >= 1");
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (relevant.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

namespace {

std::vector<int> candidate_ids(const model::DualModel& m, const data::LabeledExample& ex,
                               Task task, bool full_vocab) {
    if (!full_vocab) {
        return task == Task::kNextScene ? ex.scene_candidates : ex.item_candidates;
    }
    const std::size_t vocab =
        task == Task::kNextScene ? m.config.scene_vocab : m.config.item_vocab;
    std::vector<int> ids;
    for (std::size_t i = 1; i + 1 < vocab; ++i) ids.push_back(static_cast<int>(i));
    return ids;
}

}  // namespace

std::vector<int> rank_candidates(const model::DualModel& m,
                                 const data::LabeledExample& ex, Task task,
                                 bool full_vocab) {
    model::ForwardOutputs out = model::forward(m, ex.item_ids, ex.scene_ids, ex.mask);
    const bool scene = task == Task::kNextScene;
    const num::Var& o = scene ? out.o_scene : out.o_item;
    const num::Var& table = scene ? m.scene_emb : m.item_emb;
    std::vector<int> ids = candidate_ids(m, ex, task, full_vocab);
    num::Var probs = objectives::score(o, num::embedding_lookup(table, ids));
    std::vector<std::pair<double, int>> scored(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) scored[i] = {probs->value[i], ids[i]};
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // exact ties: lower id first
    });
    std::vector<int> ranked(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ranked[i] = scored[i].second;
    return ranked;
}

LengthGroups group_by_length(const data::Dataset& ds) {
    std::vector<std::size_t> order(ds.examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&ds](std::size_t a, std::size_t b) {
        if (ds.examples[a].history_len != ds.examples[b].history_len) {
            return ds.examples[a].history_len < ds.examples[b].history_len;
        }
        return a < b;
    });
    LengthGroups g;
    const std::size_t n = order.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n / 3) {
            g.low.push_back(order[i]);
        } else if (i < 2 * n / 3) {
            g.medium.push_back(order[i]);
        } else {
            g.high.push_back(order[i]);
        }
    }
    return g;
}

namespace {

GroupMetrics aggregate(const model::DualModel& m, const data::Dataset& ds, Task task,
                       const EvalOptions& opts, const std::vector<std::size_t>& idx) {
    GroupMetrics out;
    out.num_users = idx.size();
    for (auto k : opts.ks) {
        out.recall[k] = 0.0;
        out.ndcg[k] = 0.0;
    }
    for (std::size_t i : idx) {
        const auto& ex = ds.examples[i];
        const auto& cands = task == Task::kNextScene ? ex.scene_candidates : ex.item_candidates;
        const auto& labels = task == Task::kNextScene ? ex.scene_labels : ex.item_labels;
        std::set<int> relevant;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            if (labels[c] > 0.5) relevant.insert(cands[c]);
        }
        std::vector<int> ranked = rank_candidates(m, ex, task, opts.full_vocab);
        for (auto k : opts.ks) {
            out.recall[k] += recall_at_k(ranked, relevant, k, opts.recall_denominator_min_k);
            out.ndcg[k] += ndcg_at_k(ranked, relevant, k);
        }
    }
    if (!idx.empty()) {
        for (auto k : opts.ks) {
            out.recall[k] /= static_cast<double>(idx.size());
            out.ndcg[k] /= static_cast<double>(idx.size());
        }
    }
    return out;
}

}  // namespace

MetricsReport evaluate(const model::DualModel& m, const data::Dataset& ds, Task task,
                       const EvalOptions& opts) {
    // Label-mode consistency: next-* tasks need exactly one positive.
    for (const auto& ex : ds.examples) {
        const auto& labels = task == Task::kNextScene ? ex.scene_labels : ex.item_labels;
        double pos = 0.0;
        for (double v : labels) pos += v;
        if (task == Task::kNextItem && pos != 1.0) {
            throw ConfigError("evaluate: next-item task on period-mode labels");
        }
        if (pos < 1.0) throw ConfigError("evaluate: example without positives");
    }
    MetricsReport r;
    r.task = task_to_string(task);
    std::vector<std::size_t> all(ds.examples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    r.overall = aggregate(m, ds, task, opts, all);
    LengthGroups g = group_by_length(ds);
    r.groups["low"] = aggregate(m, ds, task, opts, g.low);
    r.groups["medium"] = aggregate(m, ds, task, opts, g.medium);
    r.groups["high"] = aggregate(m, ds, task, opts, g.high);
    return r;
}

namespace {

json group_json(const GroupMetrics& g) {
    json j;
    j["num_users"] = g.num_users;
    for (const auto& [k, v] : g.recall) j["recall"]["@" + std::to_string(k)] = v;
    for (const auto& [k, v] : g.ndcg) j["ndcg"]["@" + std::to_string(k)] = v;
    return j;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& r) {
    json j;
    j["task"] = r.task;
    j["overall"] = group_json(r.overall);
    for (const auto& [name, g] : r.groups) j["groups"][name] = group_json(g);
    return j.dump(2);
}

void export_representations(const model::DualModel& m, const data::Dataset& ds,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    LengthGroups g = group_by_length(ds);
    std::vector<std::string> group_of(ds.examples.size());
    for (auto i : g.low) group_of[i] = "low";
    for (auto i : g.medium) group_of[i] = "medium";
    for (auto i : g.high) group_of[i] = "high";
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        const auto& ex = ds.examples[i];
        model::ForwardOutputs fw = model::forward(m, ex.item_ids, ex.scene_ids, ex.mask);
        std::vector<double> z = fw.z_scene->value;
        z.insert(z.end(), fw.z_item->value.begin(), fw.z_item->value.end());
        json j;
        j["user"] = ex.user;
        j["group"] = group_of[i];
        j["z"] = z;
        out << j.dump() << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dspnet::eval
