#pragma once

#include <stdexcept>
#include <string>

namespace nwpc {

/// Invalid user input: bad parameters, bad config files, violated preconditions.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The numerics broke down (non-finite fields, no resonance found, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nwpc
