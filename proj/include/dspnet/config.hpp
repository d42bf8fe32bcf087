#pragma once

// Flat key=value run configuration shared by all CLI commands. Unknown keys
// are rejected so typos fail loudly.

#include <iosfwd>
#include <string>
#include <vector>

#include "dspnet/eval.hpp"
#include "dspnet/model.hpp"
#include "dspnet/synthgen.hpp"
#include "dspnet/train.hpp"

namespace dspnet::config {

struct DataOptions {
    std::int64_t split_ts = -1;  // -1 = auto: per-user leave-last-out boundary
    std::size_t min_hist = 3;
    std::size_t min_future = 1;
    double val_frac = 0.1;
    double test_frac = 0.2;
    std::size_t num_negatives = 49;
    // Sample item negatives proportional to training-corpus frequency instead
    // of uniformly over the vocabulary.
    bool popularity_negatives = false;
    std::size_t max_len = 50;
    data::LabelMode label_mode = data::LabelMode::kNext;
    std::uint64_t seed = 0;
};

struct RunConfig {
    synth::SynthSpec gen;
    DataOptions data;
    model::EncoderConfig encoder;  // vocab sizes filled after data prep
    train::TrainConfig trainer;
    eval::EvalOptions eval;
    std::string task = "next-item";

    std::string data_path;        // JSONL interaction log
    std::string checkpoint_path;
    std::string report_path;
    std::string metrics_path;
    std::vector<std::string> ablate_variants = {"full", "wo_apr", "wo_ccr",
                                                "wo_both", "one-to-one"};
};

// Parses `key = value` lines; '#' starts a comment; blank lines ignored.
// Throws ConfigError on unknown keys or malformed values.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);  // throws on I/O failure

}  // namespace dspnet::config
