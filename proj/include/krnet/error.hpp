#pragma once

#include <stdexcept>
#include <string>

namespace krnet {

// Base class for every error the library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration: bad field values, channel mismatches, misuse of a
// layer contract. Messages name the offending field where possible.
struct ConfigError : Error {
    using Error::Error;
};

// Tensor shape disagreement between operands.
struct ShapeError : Error {
    using Error::Error;
};

// Tensor dimensions outside the supported range.
struct SizeError : Error {
    using Error::Error;
};

// Dataset, image or manifest problems.
struct DataError : Error {
    using Error::Error;
};

// Operation invoked without the state it needs (e.g. backward without a
// preceding forward).
struct StateError : Error {
    using Error::Error;
};

// Checkpoint problems. The subclasses distinguish the load failure modes.
struct CheckpointError : Error {
    using Error::Error;
};
struct BadMagicError : CheckpointError {
    using CheckpointError::CheckpointError;
};
struct TruncatedError : CheckpointError {
    using CheckpointError::CheckpointError;
};
struct VersionError : CheckpointError {
    using CheckpointError::CheckpointError;
};

}  // namespace krnet
