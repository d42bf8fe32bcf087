#pragma once

// Interaction logs, temporal history/future splitting, vocabularies,
// candidate/label assembly and left-padding.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dspnet/errors.hpp"
#include "dspnet/rng.hpp"

namespace dspnet::data {

struct Interaction {
    std::string user;
    std::string item;
    std::string scene;
    std::int64_t ts = 0;

    bool operator==(const Interaction&) const = default;
};

// One user's chronological events, split at a timestamp boundary.
struct BehaviorSequence {
    std::string user;
    std::vector<Interaction> history;
    std::vector<Interaction> future;
};

// String <-> contiguous id map. Id 0 is PAD/MASK and maps to no string; the
// last id is UNK for strings unseen at build time.
class Vocab {
  public:
    static Vocab build(const std::vector<std::string>& tokens_in_order);

    // PAD (0) and UNK included.
    std::size_t size() const { return size_; }
    int unk_id() const { return static_cast<int>(size_) - 1; }
    int id(const std::string& token) const;  // UNK for unknown tokens
    const std::string& token(int id) const;  // throws for PAD/UNK/out of range

  private:
    std::unordered_map<std::string, int> forward_;
    std::vector<std::string> reverse_;
    std::size_t size_ = 2;  // PAD + UNK
};

struct LabeledExample {
    std::string user;
    std::vector<int> item_ids;    // left-padded, fixed length
    std::vector<int> scene_ids;   // same length as item_ids
    std::vector<unsigned char> mask;  // 1 on real positions
    std::vector<int> item_candidates;
    std::vector<double> item_labels;   // 0/1, >= 1 positive
    std::vector<int> scene_candidates;
    std::vector<double> scene_labels;
    std::size_t history_len = 0;  // before truncation, for length grouping
};

struct Dataset {
    std::string split;  // train/val/test
    std::vector<LabeledExample> examples;
};

enum class LabelMode { kNext, kPeriod };

// ---- operations ----------------------------------------------------------

// Newline-delimited JSON with keys user/item/scene/ts.
std::vector<Interaction> parse_interactions(std::istream& in);
void serialize_interactions(const std::vector<Interaction>& events, std::ostream& out);

// Per-user split at split_ts; ordering by (ts, input position); users whose
// history or future is shorter than the minima are dropped.
std::vector<BehaviorSequence> build_sequences(const std::vector<Interaction>& events,
                                              std::int64_t split_ts,
                                              std::size_t min_hist,
                                              std::size_t min_future);

// Vocabularies in first-appearance order over the given (train) sequences.
std::pair<Vocab, Vocab> build_vocabs(const std::vector<BehaviorSequence>& train_seqs);

// Keep the most recent max_len entries, left-pad with 0.
std::pair<std::vector<int>, std::vector<unsigned char>> truncate_pad(
    const std::vector<int>& ids, std::size_t max_len);

// Optional neg_weights (size = item vocab, indexed by id) biases item negative
// sampling; null keeps the uniform draw. Popularity-proportional negatives make
// the candidate task context-dependent instead of popularity-separable.
LabeledExample make_labels(const BehaviorSequence& seq, const Vocab& items,
                           const Vocab& scenes, LabelMode mode,
                           std::size_t num_negatives, std::size_t max_len, Rng& rng,
                           const std::vector<double>* neg_weights = nullptr);

// Occurrence counts of item ids over histories and futures, for neg_weights.
std::vector<double> item_frequencies(const std::vector<BehaviorSequence>& seqs,
                                     const Vocab& items);

// Deterministic user-level split into train/val/test by the given fractions.
struct SplitSequences {
    std::vector<BehaviorSequence> train, val, test;
};
SplitSequences split_users(std::vector<BehaviorSequence> seqs, double val_frac,
                           double test_frac, Rng& rng);

Dataset make_dataset(const std::string& split_name,
                     const std::vector<BehaviorSequence>& seqs, const Vocab& items,
                     const Vocab& scenes, LabelMode mode, std::size_t num_negatives,
                     std::size_t max_len, Rng& rng,
                     const std::vector<double>* neg_weights = nullptr);

}  // namespace dspnet::data
