#pragma once

#include <stdexcept>
#include <string>

namespace stochdisc {

/// A parameter or input violates a documented invariant.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A Monte Carlo request exceeds the configured step budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two time series cannot be placed on a common grid.
struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too few points remain after a look-ahead window is applied.
struct InsufficientSpan : InsufficientData {
  using InsufficientData::InsufficientData;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : FitError {
  using FitError::FitError;
};

/// Malformed CSV or configuration text.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stochdisc
