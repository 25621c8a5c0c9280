#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roughflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// No partition of the grid satisfies the localization constraint.
class InfeasibleLocalization : public Error {
 public:
  using Error::Error;
};

/// A sewing germ failed the coherence check at grid triple (s, u, t).
class GermRejected : public Error {
 public:
  GermRejected(std::size_t s, std::size_t u, std::size_t t, double defect, double allowed)
      : Error("germ coherence violated at triple (" + std::to_string(s) + ", " +
              std::to_string(u) + ", " + std::to_string(t) + "): |dh| = " +
              std::to_string(defect) + " > " + std::to_string(allowed)),
        s_(s), u_(u), t_(t), defect_(defect) {}

  std::size_t s() const noexcept { return s_; }
  std::size_t u() const noexcept { return u_; }
  std::size_t t() const noexcept { return t_; }
  double defect() const noexcept { return defect_; }

 private:
  std::size_t s_, u_, t_;
  double defect_;
};

/// A solver step guard (aliasing, CFL, undersampling) tripped.
class StepGuardViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace roughflow
