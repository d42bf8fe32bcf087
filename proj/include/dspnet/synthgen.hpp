#pragma once

// Synthetic scene-item logs with controllable scene->item interplay and
// delayed-conversion scene misalignment, plus the generating distributions
// as ground truth for acceptance experiments.

#include <cstdint>
#include <string>
#include <vector>

#include "dspnet/data.hpp"
#include "dspnet/errors.hpp"

namespace dspnet::synth {

struct SynthSpec {
    std::size_t num_users = 100;
    std::size_t num_items = 50;
    std::size_t num_scenes = 4;
    std::size_t seq_len_min = 8;
    std::size_t seq_len_max = 16;
    double interplay = 1.0;           // P(item drawn from its scene's distribution)
    double misalignment_rate = 0.0;   // P(logged scene replaced by a later one)
    bool well_separated = true;       // disjoint item blocks per scene
    std::vector<std::vector<double>> scene_transition;  // empty => uniform
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruth {
    std::vector<std::vector<double>> scene_item_dist;  // num_scenes x num_items
    std::vector<double> global_item_dist;
    SynthSpec spec;
};

struct SynthResult {
    std::vector<data::Interaction> events;
    GroundTruth truth;
};

SynthResult generate(const SynthSpec& spec);

// Plug-in mutual information (nats) between logged scene and item.
double scene_item_mutual_information(const std::vector<data::Interaction>& events);

std::string ground_truth_to_json(const GroundTruth& truth);

}  // namespace dspnet::synth
