#ifndef QPTORI_IO_HPP
#define QPTORI_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qptori/fourier.hpp"
#include "qptori/manifold.hpp"
#include "qptori/multishoot.hpp"
#include "qptori/torus.hpp"

namespace qptori {

/// Binary layout of one series (all integers 64-bit little-endian, all reals
/// IEEE-754 binary64 little-endian):
///
///   "QPTORI-F"            8 bytes
///   version               int64, currently 1
///   d, n                  int64 each
///   N_1 .. N_d            int64 each
///   coefficients          coeff_size * n complex values as (re, im) pairs,
///                         packed layout of Mesh, point-major
inline constexpr std::int64_t kFormatVersion = 1;

void write_field(std::ostream& out, const FourierField& field);
/// Throws FormatError on a bad magic string, an unknown version, invalid
/// sizes or a truncated stream.
FourierField read_field(std::istream& in);

/// One row per real frequency pair: kappa_1..kappa_d, then the n cosine and
/// the n sine amplitudes, so that x(theta) = sum over rows of cos_c
/// cos<kappa, theta> + sin_c sin<kappa, theta>. Rows with kappa_d = 0 and
/// a negative first nonzero entry are folded into their mirror. No header.
void write_coefficient_csv(std::ostream& out, const FourierField& field);

/// Torus artifact: "QPTORI-T", version, d, n, converged flag, iterations,
/// rotation (d reals), Floquet matrix (n*n reals, column-major), then the
/// torus, change and inverse-change series in the format above.
void write_torus(std::ostream& out, const TorusSolution& sol);
TorusSolution read_torus(std::istream& in);

/// Manifold artifact: "QPTORI-M", version, branch (0 stable, 1 unstable),
/// lambda, c, m, d, n, rotation, eigenvector, then the m + 1 stored series.
/// On the stable branch the stored series are a_k(theta + rho).
void write_manifold(std::ostream& out, const ManifoldExpansion& expansion);
ManifoldExpansion read_manifold(std::istream& in);

/// Multiple-shooting artifact: "QPTORI-R", version, r, d, n, converged flag,
/// iterations, section rotation, then per section j = 1..r the tag j, B_j
/// (n*n reals) and the series phi_j, C_j, C_j^{-1}.
void write_multi_torus(std::ostream& out, const MultiTorus& multi);
MultiTorus read_multi_torus(std::istream& in);

enum class ArtifactKind { kField, kTorus, kManifold, kMultiTorus };

/// Kind from the magic string at the start of a file. Throws FormatError.
ArtifactKind artifact_kind(const std::filesystem::path& path);

/// File wrappers; they throw FormatError when the file cannot be opened.
void save_field(const std::filesystem::path& path, const FourierField& field);
FourierField load_field(const std::filesystem::path& path);
void save_torus(const std::filesystem::path& path, const TorusSolution& sol);
TorusSolution load_torus(const std::filesystem::path& path);
void save_manifold(const std::filesystem::path& path, const ManifoldExpansion& expansion);
ManifoldExpansion load_manifold(const std::filesystem::path& path);
void save_multi_torus(const std::filesystem::path& path, const MultiTorus& multi);
MultiTorus load_multi_torus(const std::filesystem::path& path);

/// Torus slice along angle `axis` with the other angles fixed (radians):
/// one row per grid value theta_axis = 2 pi k / N_axis, columns theta_axis
/// then the n components.
void write_torus_slice(std::ostream& out, const FourierField& torus, std::size_t axis,
                       std::span<const double> fixed);

/// Manifold slice: rows over theta_axis on the grid times the sigma values,
/// columns theta_axis, sigma, then the n components of W(theta, sigma).
void write_manifold_slice(std::ostream& out, const ManifoldExpansion& expansion, std::size_t axis,
                          std::span<const double> fixed, std::span<const double> sigmas);

}  // namespace qptori

#endif  // QPTORI_IO_HPP
