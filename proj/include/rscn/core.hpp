#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rscn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad argument values (CLI exit code 2).
struct ArgumentError : Error {
    using Error::Error;
};

/// Invalid run/solver configuration (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Column-role mapping problems: missing columns, unknown variables.
struct SchemaError : Error {
    using Error::Error;
};

/// Malformed file contents (non-numeric cells, ragged rows, no samples).
struct ParseError : Error {
    using Error::Error;
};

/// Dimension mismatches between matrices or feature maps.
struct ShapeError : Error {
    using Error::Error;
};

/// Non-finite values, singular solves, undefined variance.
struct NumericError : Error {
    using Error::Error;
};

/// Empty order selection (caller may lower the L1 coefficient).
struct SelectionError : Error {
    using Error::Error;
};

/// Out-of-order or misaligned streaming input.
struct SequencingError : Error {
    using Error::Error;
};

inline void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) throw NumericError(what + ": non-finite values");
}

}  // namespace rscn
