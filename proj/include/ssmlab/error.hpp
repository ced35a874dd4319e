#pragma once

#include <stdexcept>
#include <string>

namespace ssmlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// ZOH discretization requested with a pole exactly at the origin.
class DegeneratePoleError : public Error {
 public:
  using Error::Error;
};

/// Bilinear discretization hit a singular resolvent (1 - delta*a/2 == 0).
class SingularResolventError : public Error {
 public:
  using Error::Error;
};

/// A requested timestamp is not on the trajectory grid.
class OffGridError : public Error {
 public:
  using Error::Error;
};

/// A simulated state became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Similarity denominator of the continuity metric vanished.
class DegenerateSimilarityError : public Error {
 public:
  using Error::Error;
};

/// Reference signal is identically zero, so a relative error is undefined.
class DegenerateReferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssmlab
