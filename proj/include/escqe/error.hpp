#pragma once

#include <stdexcept>
#include <string>

namespace escqe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Raised when a two-body coefficient tensor violates its declared symmetry.
class SymmetryError : public Error {
 public:
  using Error::Error;
};

}  // namespace escqe
