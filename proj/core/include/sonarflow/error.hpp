#pragma once

#include <stdexcept>
#include <string>

namespace sonarflow {

/// Contract violation on caller-supplied values (bad parameters, mismatched shapes).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File-system or format failure while reading or writing artifacts.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A processing stage could not produce a result (e.g. nothing to inpaint from).
class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sonarflow
