#pragma once

#include <stdexcept>
#include <string>

namespace ful {

/** Base for failures of a numerical procedure on valid input.
 *
 *  Distinct from std::invalid_argument (caller error): a DomainError means
 *  the requested computation could not be carried out on this data, and the
 *  message carries a structured diagnosis.  The CLI maps DomainError to exit
 *  code 2 and still emits a machine-readable report.
 */
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A map or lattice cell has non-positive Jacobian determinant.
struct OrientationError : DomainError {
  using DomainError::DomainError;
};

/// Requested derivative/exactness order is outside the supported range.
struct UnsupportedOrder : DomainError {
  using DomainError::DomainError;
};

/// An adaptive integral failed to reach the requested tolerance.
struct QuadratureFailure : DomainError {
  using DomainError::DomainError;
};

}  // namespace ful
