#pragma once

#include <stdexcept>
#include <string>

namespace socialfabric {

// Bad file contents, missing inputs, schema mismatches. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values detected mid-computation (e.g. a NaN loss). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw std::invalid_argument(what);
}

}  // namespace socialfabric
