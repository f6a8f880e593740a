#pragma once

#include <stdexcept>
#include <string>

namespace gateaux {

/// Precondition violated by the caller (bad dimension, point on a boundary...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A user-supplied callable produced a non-finite value or threw.
class EvaluationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A tensorized quadrature would exceed its node budget.
class BudgetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace gateaux
