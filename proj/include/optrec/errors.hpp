#pragma once

#include <stdexcept>
#include <string>

namespace optrec {

/// Malformed arguments: dimension mismatches, empty inputs, out-of-range parameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operator/kernel combination or derivative is not available.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A symmetric factorization failed even after nugget escalation.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double smallest_pivot)
      : std::runtime_error(what), smallest_pivot_(smallest_pivot) {}

  [[nodiscard]] double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

}  // namespace optrec
