#pragma once

#include <stdexcept>
#include <string>

namespace manifold {

/// Raised for invalid arguments, size mismatches and out-of-range parameters.
/// The CLI maps it to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when cached state disagrees with the data it indexes.
class ConsistencyError : public std::logic_error {
 public:
  explicit ConsistencyError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace manifold
