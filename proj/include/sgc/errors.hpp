#pragma once

#include <stdexcept>
#include <string>

namespace sgc {

// Invalid arguments or malformed inputs.
struct ParamError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (eigensolver non-convergence, singular covariance, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File or format problems; message carries path/line context.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested embedding dimension exceeds the positive part of the spectrum.
struct EmbeddingDimError : ParamError {
  EmbeddingDimError(const std::string& msg, int admissible)
      : ParamError(msg), largest_admissible(admissible) {}
  int largest_admissible;
};

// A block with fewer than two members has no sample covariance.
struct DegenerateBlockError : ParamError {
  using ParamError::ParamError;
};

}  // namespace sgc
