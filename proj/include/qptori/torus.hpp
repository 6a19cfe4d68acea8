#ifndef QPTORI_TORUS_HPP
#define QPTORI_TORUS_HPP

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qptori/cohomology.hpp"
#include "qptori/flowmap.hpp"
#include "qptori/fourier.hpp"

namespace qptori {

struct NewtonConfig {
  /// Both residual norms must fall below this.
  double tol = 1e-10;
  int max_iter = 20;
  bool stop_on_stagnation = true;
  /// Correction modes larger than this times the median at their |k|_1 are flagged.
  double resonance_threshold = 1e5;
  CohomologyOptions cohomology;
};

struct IterationRecord {
  /// max over the mesh of |phi(theta + rho) - P(phi(theta), theta)|.
  double torus_residual = 0.0;
  /// max over the mesh of |C^{-1}(theta + rho) D_xP C(theta) - B|_F.
  double floquet_residual = 0.0;
};

struct ResonanceFlag {
  std::vector<int> kappa;
  double size = 0.0;
  double median = 0.0;
};

/// Initial guess for the iteration.
struct TorusSeed {
  FourierField torus;
  FourierMatrix change;
  Eigen::MatrixXd floquet;
};

struct TorusSolution {
  FourierField torus;
  FourierMatrix change;
  FourierMatrix change_inverse;
  Eigen::MatrixXd floquet;
  /// Radians.
  std::vector<double> rotation;

  std::vector<IterationRecord> history;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<ResonanceFlag> resonance_flags;
  CohomologyReport cohomology;

  const Mesh& mesh() const { return torus.mesh(); }
  std::size_t dim() const { return torus.dim(); }
};

/// Image and Jacobian of the map at every point of a torus, on the grid.
struct MapSample {
  FourierField image;
  FourierMatrix jacobian;
};

/// One first-order jet sweep of the map over the mesh.
MapSample sample_map(const SkewMap& map, const FourierField& torus);
/// Same with the map evaluated at theta_l + offset; the torus values are
/// taken at the grid points as stored.
MapSample sample_map(const SkewMap& map, const FourierField& torus,
                     std::span<const double> offset);

/// theta -> phi(theta + rho) - P(phi(theta), theta), grid values.
FourierField invariance_error(const FourierField& torus, const FourierField& image,
                              std::span<const double> rho);

/// theta -> C^{-1}(theta + rho) A(theta) C(theta) - B, grid values.
FourierMatrix reducibility_error(const TorusSolution& sol, const FourierMatrix& jacobian);

/// Newton step for the torus with the current Floquet pair. Returns the
/// corrected torus (coefficients). Sets `correction` when non-null.
FourierField torus_correction(const TorusSolution& current, const MapSample& sample,
                              CohomologyReport* report = nullptr,
                              FourierField* correction = nullptr,
                              const CohomologyOptions& options = {});
FourierField torus_correction(const TorusSolution& current, const SkewMap& map,
                              CohomologyReport* report = nullptr);

/// Newton step for the Floquet pair given the Jacobian along the (new)
/// torus. Updates change, change_inverse and floquet in place. Sets
/// `correction` to the zero-mean H when non-null.
void floquet_correction(TorusSolution& current, const FourierMatrix& jacobian,
                        CohomologyReport* report = nullptr, FourierMatrix* correction = nullptr,
                        const CohomologyOptions& options = {});
void floquet_correction(TorusSolution& current, const SkewMap& map,
                        CohomologyReport* report = nullptr);

/// Flags modes of a correction that stand out against the median mode size
/// at the same |k|_1. Modes smaller than the largest one divided by the
/// threshold are ignored: anisotropic decay along near-resonant lanes makes
/// tiny modes exceed the median without affecting the correction.
std::vector<ResonanceFlag> resonance_monitor(const FourierField& correction,
                                             double threshold = 1e5);

/// Builds the solution object from a seed (no map evaluations).
TorusSolution make_solution(const TorusSeed& seed, std::span<const double> rotation);

/// Alternating torus and Floquet corrections until both residuals are below
/// cfg.tol. Throws ConvergenceError on divergence, non-finite residuals or
/// when max_iter is reached; stagnation returns with converged = false.
TorusSolution run_newton(const SkewMap& map, const TorusSeed& seed, const NewtonConfig& cfg = {});

/// Constant seed: phi = point, C = Id, B = D_x map(point, 0).
TorusSeed constant_seed(const SkewMap& map, const Mesh& mesh, std::span<const double> point);

/// Seed carrying a previous solution over to a nearby problem.
TorusSeed seed_from(const TorusSolution& sol);

using MapFactory = std::function<std::shared_ptr<const SkewMap>(double parameter)>;

/// Solves along a list of parameter values, each run seeded by the previous
/// solution. Returns the solution at the last value.
TorusSolution continue_torus(const MapFactory& factory, std::span<const double> parameters,
                             TorusSeed seed, const NewtonConfig& cfg = {});

/// Eigenvalues of the Floquet matrix sorted by increasing modulus.
std::vector<std::complex<double>> floquet_eigenvalues(const Eigen::MatrixXd& B);

}  // namespace qptori

#endif  // QPTORI_TORUS_HPP
