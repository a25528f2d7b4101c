#pragma once

#include <stdexcept>
#include <string>

namespace qdtcal {

/// Invalid argument to a numerical routine (probability outside [0, 1],
/// non-positive scale, empty sample, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data. Carries the 1-based line number when
/// the error comes from a file.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A computation produced a result that violates a mathematical guarantee,
/// signalling a regression or an optimizer failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdtcal
