#ifndef QPTORI_MANIFOLD_HPP
#define QPTORI_MANIFOLD_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qptori/cohomology.hpp"
#include "qptori/flowmap.hpp"
#include "qptori/fourier.hpp"
#include "qptori/torus.hpp"

namespace qptori {

enum class Branch { kStable, kUnstable };

const char* branch_name(Branch b);
/// "stable" or "unstable"; throws DomainError otherwise.
Branch parse_branch(const std::string& name);

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

/// Dominant real eigenvalue of B off the unit circle on the requested side
/// (largest modulus above 1 for unstable, smallest below 1 for stable) and
/// a real eigenvector of Euclidean norm `scaling`, sign fixed so that its
/// largest entry is positive. Between eigenvalues of equal modulus the
/// positive one wins. Throws SpectrumError if no such simple real
/// eigenvalue exists.
EigenPair eigen_pick(const Eigen::MatrixXd& B, Branch branch, double scaling = 1.0);

/// W(theta, sigma) = sum_k a_k(theta) sigma^k attached to a torus.
///
/// `stored` holds the coefficient tables the computation works with: a_k
/// itself on the unstable branch, a_k(theta + rho) on the stable one.
struct ManifoldExpansion {
  Branch branch = Branch::kUnstable;
  double eigenvalue = 0.0;
  Eigen::VectorXd eigenvector;
  double scaling = 1.0;
  /// Radians.
  std::vector<double> rotation;
  std::vector<FourierField> stored;

  /// Per order k: max over the mesh of the order-k coefficient of the
  /// invariance equation divided by the sigma multiplier to the k (lambda^k
  /// forward, lambda^-k for the inverse map).
  std::vector<double> order_residuals;
  /// order_residuals[k] / max(1, |a_k|_inf).
  std::vector<double> order_errors;
  /// Largest Test-2 tail of the transported term b_k, relative to
  /// max(1, |b_k|_inf), per order (0 for orders 0 and 1).
  std::vector<double> transport_tails;
  std::vector<std::string> warnings;
  CohomologyReport cohomology;
  /// Set when the automatic scaling policy recomputed the expansion.
  bool rescaled = false;

  int order() const { return static_cast<int>(stored.size()) - 1; }
  const Mesh& mesh() const { return stored.front().mesh(); }
  std::size_t dim() const { return stored.front().dim(); }
  /// a_k(theta) as coefficients.
  FourierField coefficient(int k) const;
  /// W(theta, sigma) at an arbitrary point, radians.
  std::vector<double> evaluate(std::span<const double> theta, double sigma) const;
};

struct ManifoldOptions {
  int order = 6;
  /// Norm of the eigenvector, c.
  double scaling = 1.0;
  /// Recompute with c = c * estimate when the radius estimate leaves
  /// [auto_low, auto_high].
  bool auto_scaling = false;
  double auto_low = 0.1;
  double auto_high = 10.0;
  /// Relative tail of b_k above which a warning is recorded.
  double tail_warn = 1e-10;
  /// Relative tail of b_k above which the computation fails.
  double tail_error = 1e-6;
  CohomologyOptions cohomology;
};

/// Order-by-order expansion through the forward map.
ManifoldExpansion unstable_expansion(const TorusSolution& sol, const SkewMap& map,
                                     const ManifoldOptions& options = {});
/// Order-by-order expansion through the inverse map.
ManifoldExpansion stable_expansion(const TorusSolution& sol, const SkewMap& map,
                                   const ManifoldOptions& options = {});
/// Either branch, applying the automatic scaling policy when requested.
ManifoldExpansion compute_manifold(const TorusSolution& sol, const SkewMap& map, Branch branch,
                                   const ManifoldOptions& options = {});

/// Recomputes order_residuals and order_errors with one jet sweep of the
/// full expansion.
void measure_order_errors(ManifoldExpansion& expansion, const SkewMap& map);

/// Relative per-order errors of the expansion re-parametrized by
/// theta -> theta + gamma (radians), evaluated on the mesh. gamma = 0
/// reproduces order_errors.
std::vector<double> order_errors_at(const ManifoldExpansion& expansion, const SkewMap& map,
                                    std::span<const double> gamma);

/// a_k -> c^k a_k: the same manifold in the parameter sigma / c.
ManifoldExpansion rescale(const ManifoldExpansion& expansion, double c);

/// Radius of convergence in sigma from the exponential rate of |a_k|_inf
/// over the upper half of the orders (least-squares slope of log |a_k|).
double estimate_radius(const ManifoldExpansion& expansion);

/// Grid values of sum_k stored_k sigma^k, i.e. W(theta, sigma) on the
/// unstable branch and W(theta + rho, sigma) on the stable one.
FourierField stored_on_grid(const ManifoldExpansion& expansion, double sigma);

}  // namespace qptori

#endif  // QPTORI_MANIFOLD_HPP
