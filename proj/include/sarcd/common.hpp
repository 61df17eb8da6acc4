#pragma once

#include <stdexcept>
#include <string>

namespace sarcd {

// Bad arguments, malformed input files, mismatched shapes: anything the
// caller could have validated up front. The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runtime numeric failures: degenerate input data, non-finite values,
// collapsed clusterings. CLI exit code 1.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem faults on read/write. CLI exit code 1.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sarcd
