// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace stringwave {

/// Input that violates a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical stage could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Evaluation at (or numerically at) a pole of the scattering coefficients.
class PoleHitError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// sin(kL) vanished where cot(kL) is required.
class CotSingularityError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// A time-domain sum kept an imaginary part above tolerance.
class ImaginaryResidueError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Newton iteration failed to reach the residual bound.
class NonConvergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace stringwave
