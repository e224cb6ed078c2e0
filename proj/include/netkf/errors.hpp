#pragma once

#include <stdexcept>
#include <string>

namespace netkf {

/// Matrix or vector shapes that do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model (plant, chain, link) violates one of its invariants.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Hypothesis of a certificate does not hold for the given model.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Floating-point breakdown inside a recursion (e.g. non-PD innovation).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

}  // namespace netkf
