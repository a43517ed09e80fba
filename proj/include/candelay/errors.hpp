#pragma once

#include <stdexcept>
#include <string>

namespace candelay {

// Configuration that cannot be resolved: unknown ECU labels, unassigned
// arbitration ids, out-of-range parameters.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent data: truncated logs, field range violations,
// captures that break the front-end contract.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace candelay
