#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lcsac {

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor/parameter shapes. The message names the operation and
/// both shapes involved.
struct DimensionError : Error {
  using Error::Error;
};

/// An API precondition was violated (non-scalar backward root, step after
/// done, KL in deterministic mode, ...).
struct ContractError : Error {
  using Error::Error;
};

/// A NaN or infinity showed up where only finite values are allowed.
struct NumericError : Error {
  using Error::Error;
};

/// A buffer cannot satisfy a sampling request yet (no valid segment window,
/// empty buffer). Trainers treat this as "skip the update".
struct InsufficientDataError : Error {
  using Error::Error;
};

/// Invalid run configuration; the message names the offending field.
struct ConfigError : Error {
  using Error::Error;
};

/// File I/O failure (missing file, malformed content).
struct IoError : Error {
  using Error::Error;
};

/// Raised when training hits a non-finite loss; carries the environment step
/// and the name of the offending tensor for the diagnostic dump.
struct TrainingAbort : Error {
  TrainingAbort(std::int64_t step_, std::string tensor_, const std::string& what_)
      : Error(what_), step(step_), tensor(std::move(tensor_)) {}
  std::int64_t step;
  std::string tensor;
};

}  // namespace lcsac
