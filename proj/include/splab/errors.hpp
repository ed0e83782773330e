#pragma once

#include <stdexcept>
#include <string>

namespace splab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coordinate vector length does not match the model dimension.
struct DimensionMismatch : Error {
    using Error::Error;
};

/// An AR root lies on or inside the unit circle (or within the root margin).
struct NonStationary : Error {
    using Error::Error;
};

/// An MA root lies on or inside the unit circle (or within the root margin).
struct NonInvertible : Error {
    using Error::Error;
};

/// A variance-like coordinate is zero or negative.
struct NonPositiveVariance : Error {
    using Error::Error;
};

/// Derivative order outside the supported range (1..3).
struct OrderUnsupported : Error {
    using Error::Error;
};

/// Cholesky factorization broke down; covariance is numerically indefinite.
struct NotPositiveDefinite : Error {
    using Error::Error;
};

/// A matrix that must be inverted is singular.
struct SingularMatrix : Error {
    using Error::Error;
};

/// Successive quadrature refinements kept disagreeing above tolerance.
struct QuadratureNotConverged : Error {
    using Error::Error;
};

/// A finite-difference stencil would leave the validated parameter region.
struct StencilOutOfDomain : Error {
    using Error::Error;
};

/// Optimizer failed to reach the gradient tolerance.
struct DidNotConverge : Error {
    using Error::Error;
};

/// Hessian at the returned optimum is not positive definite.
struct HessianNotPD : Error {
    using Error::Error;
};

/// A spectral field that must be positive is not.
struct NonPositiveDensity : Error {
    using Error::Error;
};

/// More than the tolerated fraction of Monte Carlo fits failed.
struct TooManyFitFailures : Error {
    using Error::Error;
};

/// Experiment configuration is malformed; message names the offending key.
struct ConfigInvalid : Error {
    using Error::Error;
};

/// Filesystem failure while emitting reports.
struct IoError : Error {
    using Error::Error;
};

} // namespace splab
