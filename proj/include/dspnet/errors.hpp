#pragma once

#include <stdexcept>
#include <string>

namespace dspnet {

// Shape or wiring violation between tensors/modules.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad parameter or configuration value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data (JSONL parse, schema).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value reached a place that requires finite numbers.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint does not match the model/vocab it is loaded against.
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dspnet
