#pragma once

#include <stdexcept>
#include <string>

namespace manifold_dp {

// Raised for malformed inputs: precondition violations, kind mismatches,
// out-of-range parameters, unreadable files. The CLI maps these to exit 1.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Sphere log requested at (or numerically at) the antipode of the base.
class CutLocusError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Raised when a computation cannot produce a trustworthy number: iteration
// budget exhausted, degenerate matrices. The CLI maps these to exit 2.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public NumericalFailure {
 public:
  NonConvergence(const std::string& what, double last_gradient_norm)
      : NumericalFailure(what), last_gradient_norm_(last_gradient_norm) {}
  double last_gradient_norm() const { return last_gradient_norm_; }

 private:
  double last_gradient_norm_;
};

}  // namespace manifold_dp
