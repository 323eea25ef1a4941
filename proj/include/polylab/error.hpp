#pragma once

#include <stdexcept>
#include <string>

namespace polylab {

// Bad input: invalid law, out-of-range index, malformed config. The CLI maps
// this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation produced a non-finite or otherwise unusable value. The CLI
// maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace polylab
