#pragma once

// Glue from a raw interaction log to train/val/test datasets: temporal split,
// user-level partition, vocabularies, label assembly.

#include <vector>

#include "dspnet/config.hpp"
#include "dspnet/data.hpp"

namespace dspnet::pipeline {

struct Prepared {
    data::Vocab items, scenes;
    data::Dataset train, val, test;
};

// Train and val examples always carry next-mode labels (early stopping ranks
// the single next item); test examples follow opts.label_mode.
Prepared prepare(const std::vector<data::Interaction>& events,
                 const config::DataOptions& opts);

}  // namespace dspnet::pipeline
