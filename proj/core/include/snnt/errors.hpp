// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <stdexcept>
#include <string>

namespace snnt {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes incompatible with the requested operation.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// An op produced NaN or Inf. Carries the op name that tripped the check.
struct NonFiniteError : Error {
  explicit NonFiniteError(const std::string& op, const std::string& detail = "")
      : Error("non-finite result in op '" + op + "'" +
              (detail.empty() ? "" : ": " + detail)),
        op_name(op) {}
  std::string op_name;
};

// Invalid configuration, CLI usage or file contents. Maps to exit code 1.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A verification run (gradient check etc.) failed. Maps to exit code 2.
struct VerificationError : Error {
  explicit VerificationError(const std::string& msg) : Error(msg) {}
};

// Training produced a non-finite loss. Maps to exit code 3.
struct DivergenceError : Error {
  DivergenceError(const std::string& msg, long long batch)
      : Error(msg + " (batch " + std::to_string(batch) + ")"),
        batch_id(batch) {}
  long long batch_id;
};

}  // namespace snnt
