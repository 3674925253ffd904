#pragma once

#include <stdexcept>
#include <string>

namespace epigrid {

// Field or grid shape mismatch.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (negative time, off-grid query).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Model input rejected before any computation starts.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Solver could not reach the requested accuracy (step too large, no convergence, truncation).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Monte Carlo estimate requested with too few samples to be trusted.
class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A conserved or monotone quantity was broken during a run. Always a bug.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// File could not be read or written; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace epigrid
