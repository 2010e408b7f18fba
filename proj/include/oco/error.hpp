#pragma once

#include <stdexcept>
#include <string>

namespace oco {

/// Invalid parameters or an experiment description that cannot be run.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point handed to a loss lies outside the loss's domain.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization failure, non-finite values, or a solver that did not converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oco
