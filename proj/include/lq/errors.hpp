#pragma once

#include <stdexcept>
#include <string>

namespace lq {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape mismatch (non-square input, odd dimension, inconsistent blocks).
struct DimensionError : Error {
    using Error::Error;
};

/// Malformed or inconsistent input data (files, JSON, problem ingestion).
struct IngestionError : Error {
    using Error::Error;
};

/// Invalid parameter value (non-positive step, bad fixture order, ...).
struct ParameterError : Error {
    using Error::Error;
};

/// An iterative kernel failed to converge.
struct NumericalError : Error {
    using Error::Error;
};

/// Spectral classification failed (inconsistent rank staircase,
/// degenerate Krein restriction).
struct ClassificationError : Error {
    using Error::Error;
};

/// A constructed frame failed its isotropy or invariance verification.
struct ConstructionError : Error {
    using Error::Error;
};

/// No valid coordinate chart could be found.
struct ChartError : Error {
    using Error::Error;
};

/// A documented precondition does not hold for the given input.
struct ContractError : Error {
    using Error::Error;
};

/// Symplectic reduction failed (curve meets the reducing subspace).
struct ReductionError : Error {
    using Error::Error;
};

/// A quantity violates a relation that must hold for valid inputs
/// (e.g. sum of signed frequencies not positive).
struct ConsistencyError : Error {
    using Error::Error;
};

} // namespace lq
