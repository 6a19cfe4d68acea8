#ifndef QPTORI_MULTISHOOT_HPP
#define QPTORI_MULTISHOOT_HPP

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qptori/flowmap.hpp"
#include "qptori/manifold.hpp"
#include "qptori/torus.hpp"

namespace qptori {

/// The block problem of r sections as a single map of dimension n r whose
/// rotation is the section rotation (rho / r modulo 2 pi / r). r = 1 gives
/// a map identical to the base map.
std::shared_ptr<LiftedMap> lift_to_blocks(std::shared_ptr<const QPVectorField> field, int r,
                                          const IntegratorOptions& options = {});

/// Constant seed for the lifted Newton: the point is pushed through the
/// sections at theta = 0 to fill the blocks.
TorusSeed lifted_seed(const LiftedMap& map, const Mesh& mesh, std::span<const double> point);

/// Section tori phi_j, changes C_j and matrices B_j (j = 1..r) read from a
/// solution of the lifted problem:
///   P_j(phi_j(theta), theta) = phi_{j+1}(theta + s), phi_{r+1} = phi_1,
///   B_j = C_{j+1}(theta + s)^{-1} A_j(theta) C_j(theta),
/// with s the section rotation.
struct MultiTorus {
  int sections = 1;
  std::vector<FourierField> tori;
  std::vector<FourierMatrix> changes;
  std::vector<Eigen::MatrixXd> matrices;
  /// Section rotation s, radians.
  std::vector<double> rotation;
  TorusSolution lifted;

  std::size_t dim() const { return tori.front().dim(); }
};

/// Splits a lifted solution. Throws std::invalid_argument when its
/// dimension is not a multiple of r, DomainError when the Floquet change
/// has non-zero off-diagonal blocks or the Floquet matrix has entries
/// outside the cyclic pattern (beyond `tol`).
MultiTorus split_sections(const TorusSolution& lifted, int r, double tol = 1e-8);

/// Permutation taking the natural block order (Y_1, ..., Y_r) to the
/// order (Y_r, Y_1, ..., Y_{r-1}) of the block matrices: Z = perm * Y.
Eigen::MatrixXd block_permutation(std::size_t n, int r);

/// The nr x nr block matrices of the section problem:
///   A~ has A_r in block (1, r) and A_j in block (j + 1, j);
///   B~ has B_{r-1} in block (1, r), B_r in block (2, 1) and B_j in block
///   (j + 2, j + 1);
///   C~ has C_j in block (j, j + 1) and C_r in block (r, 1);
///   C~^{-1} has C_r^{-1} in block (1, r) and C_j^{-1} in block (j + 1, j);
/// so that B~ = C~^{-1}(theta + s) A~(theta) C~(theta).
struct BlockFloquet {
  FourierMatrix A;
  Eigen::MatrixXd B;
  FourierMatrix C;
  FourierMatrix C_inverse;
};

/// Builds the block matrices; A~ comes from one first-order sweep of the
/// lifted map along the section tori.
BlockFloquet block_form(const MultiTorus& multi, const SkewMap& lifted_map);

/// Composition check: P_r(... P_1(x, theta) ..., theta + (r-1)
/// s) against P(x, theta) at each sample; returns the largest
/// Euclidean difference.
double composition_error(const PoincareMap& map, std::span<const std::vector<double>> points,
                         std::span<const std::vector<double>> angles);

struct ConsistencyReport {
  /// Eigenvalues of the lifted Floquet matrix, sorted by modulus.
  std::vector<std::complex<double>> block_eigenvalues;
  /// Largest over block eigenvalues mu of min over single eigenvalues
  /// lambda of |mu^r - lambda| / |lambda|.
  double spectral_mismatch = 0.0;
  /// Largest over single eigenvalues of the same distance to some mu^r.
  double coverage_mismatch = 0.0;
  /// Largest composition_error over the sample points.
  double composition_error = 0.0;
  /// max over the mesh of |phi_1 - phi|.
  double torus_mismatch = 0.0;
  bool consistent = false;
};

/// Spectral relation between a multiple-shooting torus and a single-shooting
/// solution of the same torus, plus the composition and torus checks at
/// `samples` mesh points. `map` must have r sections.
ConsistencyReport spectral_consistency(const MultiTorus& multi, const TorusSolution& single,
                                       const PoincareMap& map, double tol = 1e-8,
                                       double composition_tol = 1e-10, std::size_t samples = 16);

/// Per-section manifold expansions W_j from the lifted expansion: section j
/// takes block j of every coefficient and of the eigenvector; the
/// eigenvalue is mu and the rotation s. Order errors are the lifted ones.
std::vector<ManifoldExpansion> split_manifold(const ManifoldExpansion& lifted, int r);

/// Runs the manifold computation on the lifted problem and splits it.
std::vector<ManifoldExpansion> manifold_multishoot(const MultiTorus& multi, const SkewMap& lifted_map,
                                                   Branch branch, const ManifoldOptions& options,
                                                   ManifoldExpansion* lifted_out = nullptr);

/// Section count suggestion: 1 unless |B|_2 > 1e4, then ceil(log10|B|_2 / 2).
int suggest_sections(const Eigen::MatrixXd& B);

}  // namespace qptori

#endif  // QPTORI_MULTISHOOT_HPP
