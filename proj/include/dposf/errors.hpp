#pragma once

#include <stdexcept>
#include <string>

namespace dposf {

/// Input violates an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Arithmetic result is not representable (overflow, non-finite weight).
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A trace/header/config record failed validation. `field` names the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Invalid configuration or parameter value (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data cannot be processed (CLI exit code 3), e.g. an unsorted trace.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dposf
