#pragma once

#include <stdexcept>
#include <string>

namespace prefopt {

/// A point fell outside the search box, or a box was malformed.
class DomainViolation : public std::invalid_argument {
 public:
  explicit DomainViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Linear algebra failed even after the allowed conditioning fixes.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Stochastic optimisation produced a non-finite objective or gradient.
class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(const std::string& what) : NumericalError(what) {}
};

}  // namespace prefopt
