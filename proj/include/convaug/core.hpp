#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace convaug {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A sampled problem instance is numerically singular.
class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

/// A theorem precondition (monotone baseline, strong convexity, ...) does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedProblem : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Injection period too short for the baseline certificate; carries the smallest valid period.
class InvalidPeriod : public Error {
 public:
  InvalidPeriod(const std::string& what, std::size_t minimal_period)
      : Error(what), minimal_period_(minimal_period) {}
  std::size_t minimal_period() const { return minimal_period_; }

 private:
  std::size_t minimal_period_;
};

/// A rollout produced a non-finite state.
class Diverged : public Error {
 public:
  Diverged(const std::string& what, std::size_t index) : Error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace convaug
