#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit together.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// An object violates its type invariants (non-Hermitian, negative spectrum, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument lies outside the operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed to reach its target tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(what + " (achieved tolerance " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}

  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// The request exceeds what the dense desk-scale backends support.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mel
