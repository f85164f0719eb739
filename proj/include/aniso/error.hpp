#pragma once

#include <stdexcept>
#include <string>

namespace aniso {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A derivative order exceeds the available smoothness or degree.
class DegreeError : public Error {
 public:
  using Error::Error;
};

/// Two levels were passed in the wrong order (coarse level must not exceed fine level).
class LevelOrderError : public Error {
 public:
  using Error::Error;
};

/// No cell of the requested level lies inside the domain.
class EmptyInteriorError : public Error {
 public:
  using Error::Error;
};

/// A point needed by a computation lies outside the domain.
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

/// A field returned a non-finite value at a quadrature node.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace aniso
