#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kdc {

using Cx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// ── tolerances ────────────────────────────────────────────────────────────
// Algebraic identities hold to kTolAlgebraic; quantities composed from
// several algebraic steps are only promised to kTolComposed.
inline constexpr double kTolAlgebraic = 1e-12;
inline constexpr double kTolComposed = 1e-10;
inline constexpr double kOverlapFloor = 1e-8;
inline constexpr double kHullTol = 1e-8;
inline constexpr double kDedupTol = 1e-6;
inline constexpr double kStrictMargin = 1e-9;

// ── error taxonomy ────────────────────────────────────────────────────────
// PreconditionError -> CLI exit 2, InsufficientSamples -> CLI exit 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PreconditionError : Error {
    using Error::Error;
};
struct InsufficientSamples : Error {
    using Error::Error;
};
// A violated internal assertion (e.g. two evaluation routes disagree): a bug,
// not a user error.
struct InternalInconsistency : Error {
    using Error::Error;
};

struct DimensionMismatch : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct IllConditionedOverlap : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct UndefinedWeakValue : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct NotKDPositive : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct EpsilonTooLarge : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct SetEmpty : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct NoSeparation : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct EmptyFeasibleSet : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct NotADecomposition : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct LedgerMismatch : PreconditionError {
    using PreconditionError::PreconditionError;
};

}  // namespace kdc
