#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bother {

// Malformed input text (M2, CSV, mapping files). Carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Argument outside the mathematical domain of a kernel.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Too few observations for a statistic to be defined.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not enough sentences to compose the requested batches.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(std::size_t max_batches, const std::string& what)
      : std::runtime_error(what), max_batches_(max_batches) {}

  std::size_t max_batches() const noexcept { return max_batches_; }

 private:
  std::size_t max_batches_;
};

// Invalid user configuration (thresholds, weights, mixes).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Empty input where data is required.
class EmptyDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Regression could not be fitted.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bother
