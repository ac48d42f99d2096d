#pragma once

#include <stdexcept>
#include <string>

namespace symphony {

/// Base class for every error thrown by the library.
struct SymphonyError : std::runtime_error {
  explicit SymphonyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (CLI exit code 3).
struct NumericalError : SymphonyError {
  using SymphonyError::SymphonyError;
};
struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};
struct JitterBudgetExceeded : NumericalError {
  using NumericalError::NumericalError;
};
struct DofTooSmall : NumericalError {
  using NumericalError::NumericalError;
};
struct DomainError : NumericalError {
  using NumericalError::NumericalError;
};
struct LineSearchFailed : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularRstar : NumericalError {
  using NumericalError::NumericalError;
};

// Data / input failures (CLI exit code 2).
struct DataError : SymphonyError {
  using SymphonyError::SymphonyError;
};
struct ParseError : DataError {
  using DataError::DataError;
};
struct DimensionMismatch : DataError {
  using DataError::DataError;
};
struct DuplicateLabel : DataError {
  using DataError::DataError;
};
struct MappingMissing : DataError {
  using DataError::DataError;
};
struct UnknownRegion : DataError {
  using DataError::DataError;
};
struct LengthMismatch : DataError {
  using DataError::DataError;
};
struct ShapeMismatch : DataError {
  using DataError::DataError;
};

}  // namespace symphony
