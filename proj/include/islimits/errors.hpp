#pragma once

#include <stdexcept>
#include <string>

namespace islimits {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization failed (after symmetrization) or a pivot fell below
/// the relative floor.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// A design, dynamics or observation matrix failed the relative singular
/// value test.
class FullRankViolation : public Error {
 public:
  using Error::Error;
};

/// Every particle carries zero weight (all log-densities are -inf).
class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

/// A requested sample size exceeds the configured particle-draw cap.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace islimits
