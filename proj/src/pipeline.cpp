#include "dspnet/pipeline.hpp"

#include <algorithm>
#include <unordered_map>

namespace dspnet::pipeline {

namespace {

// Per-user temporal split when no global boundary is given: the most recent
// quarter of each user's events (at least min_future) becomes the future
// window.
std::vector<data::BehaviorSequence> auto_split(const std::vector<data::Interaction>& events,
                                               std::size_t min_hist,
                                               std::size_t min_future) {
    std::vector<std::string> user_order;
    std::unordered_map<std::string, std::vector<std::pair<std::size_t, const data::Interaction*>>>
        per_user;
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto& bucket = per_user[events[i].user];
        if (bucket.empty()) user_order.push_back(events[i].user);
        bucket.emplace_back(i, &events[i]);
    }
    std::vector<data::BehaviorSequence> out;
    for (const auto& user : user_order) {
        auto& bucket = per_user[user];
        std::sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) {
            if (a.second->ts != b.second->ts) return a.second->ts < b.second->ts;
            return a.first < b.first;
        });
        const std::size_t n = bucket.size();
        const std::size_t n_future = std::max(min_future, n / 4);
        if (n < n_future || n - n_future < min_hist) continue;
        data::BehaviorSequence seq;
        seq.user = user;
        for (std::size_t i = 0; i < n; ++i) {
            (i < n - n_future ? seq.history : seq.future).push_back(*bucket[i].second);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace

Prepared prepare(const std::vector<data::Interaction>& events,
                 const config::DataOptions& opts) {
    std::vector<data::BehaviorSequence> seqs =
        opts.split_ts >= 0
            ? data::build_sequences(events, opts.split_ts, opts.min_hist, opts.min_future)
            : auto_split(events, opts.min_hist, opts.min_future);
    if (seqs.empty()) throw ConfigError("prepare: no usable sequences after split");

    Rng split_rng(opts.seed ^ 0x51ULL);
    data::SplitSequences parts =
        data::split_users(std::move(seqs), opts.val_frac, opts.test_frac, split_rng);
    if (parts.train.empty()) throw ConfigError("prepare: empty training split");

    auto [items, scenes] = data::build_vocabs(parts.train);
    Rng train_rng(opts.seed ^ 0x11ULL);
    Rng val_rng(opts.seed ^ 0x22ULL);
    Rng test_rng(opts.seed ^ 0x33ULL);
    Prepared p{std::move(items), std::move(scenes), {}, {}, {}};
    std::vector<double> freq;
    const std::vector<double>* weights = nullptr;
    if (opts.popularity_negatives) {
        freq = data::item_frequencies(parts.train, p.items);
        weights = &freq;
    }
    p.train = data::make_dataset("train", parts.train, p.items, p.scenes,
                                 data::LabelMode::kNext, opts.num_negatives, opts.max_len,
                                 train_rng, weights);
    p.val = data::make_dataset("val", parts.val, p.items, p.scenes, data::LabelMode::kNext,
                               opts.num_negatives, opts.max_len, val_rng, weights);
    p.test = data::make_dataset("test", parts.test, p.items, p.scenes, opts.label_mode,
                                opts.num_negatives, opts.max_len, test_rng, weights);
    return p;
}

}  // namespace dspnet::pipeline
