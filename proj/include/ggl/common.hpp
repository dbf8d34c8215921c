// Shared error types and small utilities.
#pragma once

#include <stdexcept>
#include <string>

namespace ggl {

// Raised when a file cannot be read/written or its contents are malformed.
// Carries the offending path(s) in the message.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an iterative solver fails to meet its contract (iteration cap,
// broken line search, ...). The message carries the diagnostics.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ggl
