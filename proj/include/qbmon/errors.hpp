#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace qbmon {

// Shape mismatch between an operator/state and a layout. `subsystem` names
// the offending factor when the mismatch can be pinned to one.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what,
                          std::optional<std::size_t> subsystem = std::nullopt)
      : std::invalid_argument(what), subsystem_(subsystem) {}

  std::optional<std::size_t> subsystem() const noexcept { return subsystem_; }

 private:
  std::optional<std::size_t> subsystem_;
};

// Violated state/operator invariant (norm, trace, hermiticity, positivity).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Integration broke down: trace drift, positivity loss, oversized steps.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)), message_(what) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

}  // namespace qbmon
