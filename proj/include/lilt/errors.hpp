#pragma once

#include <stdexcept>
#include <string>

namespace lilt {

// Error taxonomy, mapped to CLI exit codes: config -> 2, data -> 3, numeric -> 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape mismatches are treated as configuration/geometry problems.
struct ShapeError : ConfigError {
  explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

// Out-of-range ids/coordinates are treated as bad input data.
struct IndexError : DataError {
  explicit IndexError(const std::string& msg) : DataError(msg) {}
};

}  // namespace lilt
