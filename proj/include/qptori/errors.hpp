#ifndef QPTORI_ERRORS_HPP
#define QPTORI_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace qptori {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An index or argument outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Division by a jet whose constant term vanishes (or similar).
class SingularJetError : public Error {
 public:
  using Error::Error;
};

/// The integrator could not reach the final time.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double reached_time)
      : Error(what), reached_time_(reached_time) {}
  double reached_time() const { return reached_time_; }

 private:
  double reached_time_;
};

/// A cohomological block is (numerically) singular.
class ResonanceError : public Error {
 public:
  ResonanceError(const std::string& what, std::vector<int> kappa, int order)
      : Error(what), kappa_(std::move(kappa)), order_(order) {}
  const std::vector<int>& kappa() const { return kappa_; }
  /// Manifold order at which the resonance occurred, 0 for torus/Floquet.
  int order() const { return order_; }

 private:
  std::vector<int> kappa_;
  int order_;
};

/// The Floquet matrix lacks the real hyperbolic eigenvalue requested.
class SpectrumError : public Error {
 public:
  using Error::Error;
};

/// Newton did not converge (max iterations, divergence, non-finite values).
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The Fourier mesh is too coarse for a computed series (tail too large).
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or version-mismatched artifact or config file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace qptori

#endif  // QPTORI_ERRORS_HPP
