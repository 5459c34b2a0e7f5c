#pragma once

#include <stdexcept>
#include <string>

namespace flexsc {

/// Bad arguments, out-of-range values, schema problems.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Singular I - L*D in an interconnection.
class AlgebraicLoopError : public std::runtime_error {
 public:
  explicit AlgebraicLoopError(const std::string& what) : std::runtime_error(what) {}
};

/// Norm requested on a system with poles in the closed right half plane.
class UnstableSystemError : public std::runtime_error {
 public:
  explicit UnstableSystemError(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flexsc
