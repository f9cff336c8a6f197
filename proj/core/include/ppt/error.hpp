#pragma once

#include <stdexcept>
#include <string>

namespace ppt {

/// Invalid or inconsistent experiment configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable, malformed or out-of-range data files. CLI exit code 3.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values reached the optimizer. CLI exit code 4.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ppt
