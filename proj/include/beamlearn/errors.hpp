#pragma once

#include <stdexcept>
#include <string>

namespace beamlearn {

// A search space (or converted graph) violates a structural invariant.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// An operation was called outside its contract.
struct PreconditionError : std::invalid_argument {
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad run configuration: unknown names, out-of-range values, malformed files.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace beamlearn
