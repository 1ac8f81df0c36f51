#pragma once

#include <stdexcept>
#include <string>

namespace tidb {

/// Invalid argument values (non-positive sizes, out-of-range parameters).
struct ParamError : std::invalid_argument {
    explicit ParamError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A requested allocation or state count exceeds the configured budget.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor dimensions do not line up.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable or malformed files (containers, WAV, manifests).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration (unknown keys, inconsistent settings).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dataset-level problems (missing tracks, overlapping splits).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training diverged; carries the epoch and the last finite loss.
struct TrainingError : std::runtime_error {
    int epoch;
    double last_finite_loss;
    TrainingError(const std::string& msg, int epoch_, double last_loss)
        : std::runtime_error(msg), epoch(epoch_), last_finite_loss(last_loss) {}
};

}  // namespace tidb
