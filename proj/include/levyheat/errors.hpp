#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace levyheat {

// Malformed configuration or model file. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain (x = 0 for J, t <= 0, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Any numerical failure. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature that did not reach its tolerance. Carries the partial sums seen
// so far so callers can print a diagnostic.
class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, std::vector<double> partial_sums)
      : NumericalError(what), partial_sums_(std::move(partial_sums)) {}

  const std::vector<double>& partial_sums() const noexcept { return partial_sums_; }

 private:
  std::vector<double> partial_sums_;
};

}  // namespace levyheat
