#pragma once

#include <stdexcept>
#include <string>

namespace ptk {

/// Invalid configuration: bad hyper-parameters, malformed blend, impossible plan.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid runtime input, e.g. an out-of-range token id or a too-short sequence.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tensor shapes that do not line up.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A data pipeline stage produced nothing usable or found corrupt artifacts.
class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ptk
