#pragma once

// Model checkpoints: a JSON container of the encoder config plus named
// parameter tensors. Loading rebuilds the model from the stored config and
// validates every tensor shape before accepting values.

#include <string>

#include "dspnet/model.hpp"

namespace dspnet::checkpoint {

std::string to_json(const model::DualModel& m);
model::DualModel from_json(const std::string& text);

void save(const model::DualModel& m, const std::string& path);
model::DualModel load(const std::string& path);

std::string config_to_json(const model::EncoderConfig& cfg);
model::EncoderConfig config_from_json(const std::string& text);

}  // namespace dspnet::checkpoint
