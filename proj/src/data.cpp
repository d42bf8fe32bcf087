#include "dspnet/data.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

namespace dspnet::data {

using nlohmann::json;

// ---- Vocab ---------------------------------------------------------------

Vocab Vocab::build(const std::vector<std::string>& tokens_in_order) {
    Vocab v;
    v.reverse_.push_back("");  // PAD
    for (const auto& t : tokens_in_order) {
        if (v.forward_.find(t) == v.forward_.end()) {
            const int id = static_cast<int>(v.reverse_.size());
            v.forward_.emplace(t, id);
            v.reverse_.push_back(t);
        }
    }
    v.size_ = v.reverse_.size() + 1;  // + UNK
    return v;
}

int Vocab::id(const std::string& token) const {
    auto it = forward_.find(token);
    return it == forward_.end() ? unk_id() : it->second;
}

const std::string& Vocab::token(int id) const {
    if (id <= 0 || static_cast<std::size_t>(id) >= reverse_.size()) {
        throw ConfigError("Vocab::token: id " + std::to_string(id) + " has no string");
    }
    return reverse_[static_cast<std::size_t>(id)];
}

// ---- parsing -------------------------------------------------------------

std::vector<Interaction> parse_interactions(std::istream& in) {
    std::vector<Interaction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError("malformed JSON at line " + std::to_string(lineno));
        }
        for (const char* key : {"user", "item", "scene", "ts"}) {
            if (!j.contains(key)) {
                throw ParseError("missing key \"" + std::string(key) + "\" at line " +
                                 std::to_string(lineno));
            }
        }
        Interaction ev;
        try {
            ev.user = j.at("user").get<std::string>();
            ev.item = j.at("item").get<std::string>();
            ev.scene = j.at("scene").get<std::string>();
            ev.ts = j.at("ts").get<std::int64_t>();
        } catch (const json::exception& e) {
            throw ParseError("bad field type at line " + std::to_string(lineno) + ": " +
                             e.what());
        }
        if (ev.user.empty() || ev.item.empty() || ev.scene.empty() || ev.ts < 0) {
            throw ParseError("invalid record at line " + std::to_string(lineno));
        }
        out.push_back(std::move(ev));
    }
    return out;
}

void serialize_interactions(const std::vector<Interaction>& events, std::ostream& out) {
    for (const auto& ev : events) {
        json j;
        j["user"] = ev.user;
        j["item"] = ev.item;
        j["scene"] = ev.scene;
        j["ts"] = ev.ts;
        out << j.dump() << "\n";
    }
}

// ---- sequence building ---------------------------------------------------

std::vector<BehaviorSequence> build_sequences(const std::vector<Interaction>& events,
                                              std::int64_t split_ts,
                                              std::size_t min_hist,
                                              std::size_t min_future) {
    if (min_hist < 1 || min_future < 1) {
        throw ConfigError("build_sequences: minima must be >= 1");
    }
    // Group per user, preserving first-appearance order of users.
    std::vector<std::string> user_order;
    std::unordered_map<std::string, std::vector<std::pair<std::size_t, const Interaction*>>>
        per_user;
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto& bucket = per_user[events[i].user];
        if (bucket.empty()) user_order.push_back(events[i].user);
        bucket.emplace_back(i, &events[i]);
    }
    std::vector<BehaviorSequence> out;
    for (const auto& user : user_order) {
        auto& bucket = per_user[user];
        // Stable under timestamp ties: tie-break by input position.
        std::sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) {
            if (a.second->ts != b.second->ts) return a.second->ts < b.second->ts;
            return a.first < b.first;
        });
        BehaviorSequence seq;
        seq.user = user;
        for (const auto& [pos, ev] : bucket) {
            (ev->ts < split_ts ? seq.history : seq.future).push_back(*ev);
        }
        if (seq.history.size() >= min_hist && seq.future.size() >= min_future) {
            out.push_back(std::move(seq));
        }
    }
    return out;
}

std::pair<Vocab, Vocab> build_vocabs(const std::vector<BehaviorSequence>& train_seqs) {
    if (train_seqs.empty()) throw ConfigError("build_vocabs: no sequences");
    std::vector<std::string> items, scenes;
    for (const auto& seq : train_seqs) {
        for (const auto& ev : seq.history) {
            items.push_back(ev.item);
            scenes.push_back(ev.scene);
        }
        for (const auto& ev : seq.future) {
            items.push_back(ev.item);
            scenes.push_back(ev.scene);
        }
    }
    return {Vocab::build(items), Vocab::build(scenes)};
}

std::pair<std::vector<int>, std::vector<unsigned char>> truncate_pad(
    const std::vector<int>& ids, std::size_t max_len) {
    if (max_len < 1) throw ConfigError("truncate_pad: max_len must be >= 1");
    std::vector<int> out(max_len, 0);
    std::vector<unsigned char> mask(max_len, 0);
    const std::size_t keep = std::min(ids.size(), max_len);
    const std::size_t src = ids.size() - keep;  // most recent events
    for (std::size_t i = 0; i < keep; ++i) {
        out[max_len - keep + i] = ids[src + i];
        mask[max_len - keep + i] = 1;
    }
    return {std::move(out), std::move(mask)};
}

namespace {

// positives (first-appearance order) + sampled negatives, labels aligned.
// Negatives are uniform over real ids unless weights are given.
void assemble_candidates(const std::vector<int>& positive_order, std::size_t vocab_size,
                         std::size_t num_negatives, Rng& rng,
                         std::vector<int>& candidates, std::vector<double>& labels,
                         const std::vector<double>* weights = nullptr) {
    std::set<int> pos_set(positive_order.begin(), positive_order.end());
    // Real ids are 1 .. vocab_size - 1 (PAD excluded, UNK allowed as a candidate
    // only when it is a positive).
    const std::size_t real = vocab_size >= 2 ? vocab_size - 2 : 0;
    if (real < pos_set.size() + num_negatives &&
        !(pos_set.count(static_cast<int>(vocab_size) - 1) &&
          real + 1 >= pos_set.size() + num_negatives)) {
        throw ConfigError("vocabulary too small for " + std::to_string(pos_set.size()) +
                          " positives + " + std::to_string(num_negatives) + " negatives");
    }
    double weight_total = 0.0;
    if (weights) {
        if (weights->size() != vocab_size) {
            throw ConfigError("assemble_candidates: weight table size mismatch");
        }
        for (std::size_t id = 1; id + 1 < vocab_size; ++id) weight_total += (*weights)[id];
        if (weight_total <= 0.0) weights = nullptr;  // degenerate table: fall back
    }
    auto draw_id = [&]() {
        if (!weights) return 1 + static_cast<int>(rng.uniform(vocab_size - 2));
        double u = rng.next_double() * weight_total;
        for (std::size_t id = 1; id + 1 < vocab_size; ++id) {
            u -= (*weights)[id];
            if (u < 0.0) return static_cast<int>(id);
        }
        return static_cast<int>(vocab_size) - 2;
    };
    candidates.assign(positive_order.begin(), positive_order.end());
    labels.assign(candidates.size(), 1.0);
    std::size_t added = 0;
    while (added < num_negatives) {
        const int cand = draw_id();  // excludes PAD and UNK
        if (pos_set.count(cand)) continue;
        if (std::find(candidates.begin(), candidates.end(), cand) != candidates.end()) continue;
        candidates.push_back(cand);
        labels.push_back(0.0);
        ++added;
    }
}

std::vector<int> dedup_keep_order(const std::vector<int>& ids) {
    std::vector<int> out;
    for (int id : ids) {
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    return out;
}

}  // namespace

std::vector<double> item_frequencies(const std::vector<BehaviorSequence>& seqs,
                                     const Vocab& items) {
    std::vector<double> freq(items.size(), 0.0);
    for (const auto& seq : seqs) {
        for (const auto& ev : seq.history) freq[static_cast<std::size_t>(items.id(ev.item))] += 1.0;
        for (const auto& ev : seq.future) freq[static_cast<std::size_t>(items.id(ev.item))] += 1.0;
    }
    return freq;
}

LabeledExample make_labels(const BehaviorSequence& seq, const Vocab& items,
                           const Vocab& scenes, LabelMode mode,
                           std::size_t num_negatives, std::size_t max_len, Rng& rng,
                           const std::vector<double>* neg_weights) {
    if (seq.future.empty()) throw ConfigError("make_labels: empty future window");
    if (num_negatives < 1) throw ConfigError("make_labels: need num_negatives >= 1");

    LabeledExample ex;
    ex.user = seq.user;
    ex.history_len = seq.history.size();
    std::vector<int> item_hist, scene_hist;
    for (const auto& ev : seq.history) {
        item_hist.push_back(items.id(ev.item));
        scene_hist.push_back(scenes.id(ev.scene));
    }
    std::tie(ex.item_ids, ex.mask) = truncate_pad(item_hist, max_len);
    ex.scene_ids = truncate_pad(scene_hist, max_len).first;

    std::vector<int> item_pos, scene_pos;
    if (mode == LabelMode::kNext) {
        item_pos = {items.id(seq.future.front().item)};
        scene_pos = {scenes.id(seq.future.front().scene)};
    } else {
        for (const auto& ev : seq.future) {
            item_pos.push_back(items.id(ev.item));
            scene_pos.push_back(scenes.id(ev.scene));
        }
        item_pos = dedup_keep_order(item_pos);
        scene_pos = dedup_keep_order(scene_pos);
    }
    assemble_candidates(item_pos, items.size(), num_negatives, rng, ex.item_candidates,
                        ex.item_labels, neg_weights);
    // Scene vocabularies are small; cap negatives at what is available.
    const std::size_t scene_room =
        scenes.size() >= 2 ? scenes.size() - 2 - std::min(scenes.size() - 2, scene_pos.size())
                           : 0;
    assemble_candidates(scene_pos, scenes.size(), std::min(num_negatives, scene_room), rng,
                        ex.scene_candidates, ex.scene_labels);
    return ex;
}

SplitSequences split_users(std::vector<BehaviorSequence> seqs, double val_frac,
                           double test_frac, Rng& rng) {
    std::vector<std::size_t> idx(seqs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx.begin(), idx.end());
    const auto n = seqs.size();
    const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * val_frac);
    const auto n_test = static_cast<std::size_t>(static_cast<double>(n) * test_frac);
    SplitSequences out;
    for (std::size_t i = 0; i < n; ++i) {
        auto& seq = seqs[idx[i]];
        if (i < n_val) {
            out.val.push_back(std::move(seq));
        } else if (i < n_val + n_test) {
            out.test.push_back(std::move(seq));
        } else {
            out.train.push_back(std::move(seq));
        }
    }
    return out;
}

Dataset make_dataset(const std::string& split_name,
                     const std::vector<BehaviorSequence>& seqs, const Vocab& items,
                     const Vocab& scenes, LabelMode mode, std::size_t num_negatives,
                     std::size_t max_len, Rng& rng,
                     const std::vector<double>* neg_weights) {
    Dataset ds;
    ds.split = split_name;
    ds.examples.reserve(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        Rng ex_rng = rng.fork(i);
        ds.examples.push_back(make_labels(seqs[i], items, scenes, mode, num_negatives,
                                          max_len, ex_rng, neg_weights));
    }
    return ds;
}

}  // namespace dspnet::data
