#ifndef QPTORI_COHOMOLOGY_HPP
#define QPTORI_COHOMOLOGY_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qptori/fourier.hpp"

namespace qptori {

/// A frequency whose linear block is poorly conditioned.
struct SmallDivisor {
  std::vector<int> kappa;
  /// Reciprocal condition estimate of the block.
  double rcond = 0.0;
  /// Manifold order, 0 for torus and Floquet equations.
  int order = 0;
};

struct CohomologyOptions {
  /// Blocks with condition number above this are reported. The condition
  /// of a block M is |M^-1| times a bound on the norm of all blocks
  /// (|scale| + |B| for the shifted equation).
  double warn_condition = 1e8;
  /// Blocks with reciprocal condition below this raise ResonanceError.
  double singular_rcond = 1e-15;
};

struct CohomologyReport {
  std::vector<SmallDivisor> small_divisors;
  /// Largest block condition estimate seen.
  double max_condition = 0.0;

  void merge(const CohomologyReport& other);
};

/// Solves scale * u(theta + rho) = B u(theta) + g(theta) mode by mode.
/// scale = 1 is the torus equation, scale = lambda^m the manifold one.
/// rho in radians. Returns coefficients.
FourierField solve_shifted_cohomology(const FourierField& g, const Eigen::MatrixXd& B,
                                      std::span<const double> rho, double scale, int order = 0,
                                      CohomologyReport* report = nullptr,
                                      const CohomologyOptions& options = {});

/// u(theta + rho) = B u(theta) + g(theta).
FourierField solve_torus_cohomology(const FourierField& g, const Eigen::MatrixXd& B,
                                    std::span<const double> rho,
                                    CohomologyReport* report = nullptr,
                                    const CohomologyOptions& options = {});

/// lambda^m u(theta + rho) = B u(theta) + g(theta).
FourierField solve_manifold_cohomology(const FourierField& g, const Eigen::MatrixXd& B,
                                       std::span<const double> rho, double lambda, int m,
                                       CohomologyReport* report = nullptr,
                                       const CohomologyOptions& options = {});

/// H(theta + rho) B - B H(theta) = R(theta) for the non-constant modes of R;
/// the returned H has zero mean. The mean of R is ignored.
FourierMatrix solve_floquet_cohomology(const FourierMatrix& R, const Eigen::MatrixXd& B,
                                       std::span<const double> rho,
                                       CohomologyReport* report = nullptr,
                                       const CohomologyOptions& options = {});

}  // namespace qptori

#endif  // QPTORI_COHOMOLOGY_HPP
