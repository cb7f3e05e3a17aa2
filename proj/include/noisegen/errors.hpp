#pragma once

#include <stdexcept>
#include <string>

namespace ng {

// Bad shapes, bad arguments, bad config or data. CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/dimension mismatches in tensor ops.
struct ShapeError : ValidationError {
    using ValidationError::ValidationError;
};

// Filesystem and serialization failures. CLI exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ng
