#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mom {

// Base of every error raised by the library. The CLI maps ArgumentError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input value: bad label, non-finite number, sup that is infinite.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition on counts, sizes or configuration.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Iterative solver broke down (zero step scale, non-finite iterate).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Quadrature or another numerical routine failed to reach its tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Lepski selection found no block count with a nonempty tail intersection.
class SelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace mom
