#pragma once

#include <stdexcept>
#include <string>

namespace dddm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible extents between operands.
struct ShapeError : Error {
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (e.g. t > 1).
struct DomainError : Error {
  using Error::Error;
};

// NaN or Inf produced or consumed.
struct NumericError : Error {
  using Error::Error;
};

// Caller broke a documented precondition.
struct ContractError : Error {
  using Error::Error;
};

struct DegenerateStatsError : Error {
  using Error::Error;
};

// Bad config value, malformed file, incompatible checkpoint.
struct UsageError : Error {
  using Error::Error;
};

// Checkpoint parameter names or shapes differ from the model.
struct TopologyError : UsageError {
  using UsageError::UsageError;
};

}  // namespace dddm
