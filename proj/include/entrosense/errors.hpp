#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entrosense {

/// Invalid argument: out-of-range parameter, dimension mismatch, infeasible budget.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The quantity is undefined for this input (empty selection, rank 0, singular Gram).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A pivot went clearly negative during pivoted Cholesky.
class NotPsdError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed or invalid scenario/config file. `line()` is 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace entrosense
