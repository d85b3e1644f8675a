#pragma once

#include <stdexcept>
#include <string>

namespace streamtts {

// Inconsistent shapes or architecture settings. Not recoverable by retrying.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller supplied bad input (empty sequence, unknown symbol id, ...).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A NaN or Inf showed up where the model guarantees finite values.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model container could not be read.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace streamtts
