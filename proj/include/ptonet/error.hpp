#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptonet {

// Base of every error thrown by the library. Commands map the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad shapes, negative weights, schema violations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a formula (e.g. t >= t0 + T for mu).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite intermediate values, singular factorizations, overflow.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : ValidationError("line " + std::to_string(line) + ", column " +
                        std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace ptonet
