#pragma once

#include <stdexcept>
#include <string>

namespace freqadmm {

// Argument outside the domain of a utility function (e.g. the pole of the
// reciprocal family).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The scalar x-update could not bracket a stationary point. Raised for
// utilities that are not concave on the search interval.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Empty or malformed resource budget.
class BudgetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (length mismatch, infeasible point,
// non-monotone timestamps, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace freqadmm
