#pragma once

#include <stdexcept>
#include <string>

namespace lisce {

// Base for everything thrown by this library. The CLI maps subtrees of this
// hierarchy to exit codes: ConfigError -> 2, NumericalError -> 3, IoError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : Error {
  using Error::Error;
};

// Matrix arguments that violate a structural precondition.
struct NotHermitian : NumericalError { using NumericalError::NumericalError; };
struct NotPsd : NumericalError { using NumericalError::NumericalError; };
struct NotPd : NumericalError { using NumericalError::NumericalError; };

struct InvalidRho : NumericalError { using NumericalError::NumericalError; };
struct InsufficientPilots : NumericalError { using NumericalError::NumericalError; };
struct SingularNormalMatrix : NumericalError { using NumericalError::NumericalError; };
struct NonMonotone : NumericalError { using NumericalError::NumericalError; };
struct DegenerateEstimate : NumericalError { using NumericalError::NumericalError; };
struct OddAntennaCount : NumericalError { using NumericalError::NumericalError; };
struct TrainingDiverged : NumericalError { using NumericalError::NumericalError; };

struct IoError : Error {
  using Error::Error;
};

// Weight/dataset file deserialization failures.
struct BadMagic : IoError { using IoError::IoError; };
struct VersionMismatch : IoError { using IoError::IoError; };
struct TruncatedFile : IoError { using IoError::IoError; };
struct ChecksumMismatch : IoError { using IoError::IoError; };

// CSV consumed by the chart writer does not have the expected columns/rows.
struct SchemaMismatch : IoError { using IoError::IoError; };

struct ConfigError : Error {
  using Error::Error;
};

struct ParseError : ConfigError { using ConfigError::ConfigError; };
struct UnknownKey : ConfigError { using ConfigError::ConfigError; };
struct MissingRequired : ConfigError { using ConfigError::ConfigError; };

}  // namespace lisce
