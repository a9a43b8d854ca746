#pragma once

#include <stdexcept>
#include <string>

namespace mfapc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix sizes disagree with the declared dimensions.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Invalid controller/experiment parameters (horizons, weights, orders).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The regularized normal matrix could not be factored.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

// The plant does not provide the requested capability (e.g. analytic Jacobians).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// An analysis routine was called outside its domain (e.g. unstable loop).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// det T(z^-1) vanishes identically.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfapc
