#ifndef QPTORI_FOURIER_HPP
#define QPTORI_FOURIER_HPP

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace qptori {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Largest supported number of mesh angles.
inline constexpr std::size_t kMaxAngles = 8;

/// Equispaced mesh on the d-torus with an odd number of points per angle.
///
/// Grid values are stored row-major over the tuple (k_1, ..., k_d),
/// 0 <= k_j < N_j, at the points 2*pi*k_j/N_j. Coefficients are stored in
/// the real-input packed layout: row-major over (k_1, ..., k_{d-1}, k_d) with
/// 0 <= k_j < N_j for j < d and 0 <= k_d <= (N_d - 1)/2; the remaining
/// coefficients follow from conjugate symmetry.
class Mesh {
 public:
  Mesh() = default;
  /// Throws DomainError unless sizes is non-empty and every entry is odd
  /// and positive.
  explicit Mesh(std::vector<int> sizes);

  std::size_t dims() const { return sizes_.size(); }
  const std::vector<int>& sizes() const { return sizes_; }
  int size(std::size_t j) const { return sizes_[j]; }
  /// (N_j - 1) / 2, the largest frequency resolved along angle j.
  int half(std::size_t j) const { return (sizes_[j] - 1) / 2; }

  /// Number of grid points M.
  std::size_t grid_size() const { return grid_size_; }
  /// Number of stored complex coefficients.
  std::size_t coeff_size() const { return coeff_size_; }
  /// Real slots needed to hold either representation in one buffer.
  std::size_t padded_size() const { return 2 * coeff_size_; }

  /// Grid tuple (k_1, ..., k_d) of a flat row-major grid index.
  std::vector<int> grid_index_to_tuple(std::size_t index) const;
  /// Signed frequency of a flat index into the full (unpacked, M-entry)
  /// coefficient array; entries past N_j/2 fold to k_j - N_j.
  std::vector<int> coeff_index_to_tuple(std::size_t index) const;
  /// Signed frequency addressed by an index into the packed layout.
  std::vector<int> packed_index_to_tuple(std::size_t index) const;
  void packed_index_to_tuple(std::size_t index, std::span<int> kappa) const;
  /// Packed index of a frequency with kappa_d >= 0. Throws DomainError for
  /// frequencies outside the packed set.
  std::size_t packed_tuple_to_index(std::span<const int> kappa) const;

  /// Grid point in radians.
  std::vector<double> grid_point(std::size_t index) const;
  void grid_point(std::size_t index, std::span<double> theta) const;

  bool operator==(const Mesh& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<int> sizes_;
  std::size_t grid_size_ = 0;
  std::size_t coeff_size_ = 0;
};

enum class Representation { kGrid, kCoefficients };

/// Vector-valued truncated real Fourier series on a Mesh, held either as
/// grid values or as packed complex coefficients. Both payloads are
/// point-major: entry (point l, component c) sits at l * dim() + c.
///
/// Coefficients use the unnormalized forward transform
///   xhat_k = sum_theta x(theta) exp(-i <k, theta>),
/// so x(theta) = (1/M) sum_k xhat_k exp(i <k, theta>).
class FourierField {
 public:
  FourierField() = default;

  static FourierField from_values(Mesh mesh, std::size_t dim, std::vector<double> values);
  static FourierField from_coefficients(Mesh mesh, std::size_t dim,
                                        std::vector<Complex> coefficients);
  static FourierField constant(Mesh mesh, std::span<const double> value,
                               Representation rep = Representation::kCoefficients);
  static FourierField zeros(Mesh mesh, std::size_t dim,
                            Representation rep = Representation::kCoefficients);

  const Mesh& mesh() const { return mesh_; }
  std::size_t dim() const { return dim_; }
  Representation representation() const { return rep_; }
  bool is_grid() const { return rep_ == Representation::kGrid; }

  /// Grid payload; throws std::logic_error in coefficient representation.
  std::span<const double> values() const;
  /// Coefficient payload; throws std::logic_error in grid representation.
  std::span<const Complex> coefficients() const;

  /// Grid values to coefficients. Identity when already coefficients.
  FourierField analyze() const;
  /// Coefficients to grid values. Identity when already grid values.
  FourierField synthesize() const;

 private:
  Mesh mesh_;
  std::size_t dim_ = 0;
  Representation rep_ = Representation::kGrid;
  std::vector<double> values_;
  std::vector<Complex> coefficients_;
};

/// rows x cols matrix of scalar series on one mesh. Entries are the
/// components of a single FourierField, column-major at each point, so a
/// point's payload maps directly onto an Eigen column-major matrix.
class FourierMatrix {
 public:
  FourierMatrix() = default;
  FourierMatrix(std::size_t rows, std::size_t cols, FourierField entries);

  static FourierMatrix identity(const Mesh& mesh, std::size_t n,
                                Representation rep = Representation::kCoefficients);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Mesh& mesh() const { return entries_.mesh(); }
  const FourierField& field() const { return entries_; }

  FourierMatrix analyze() const { return {rows_, cols_, entries_.analyze()}; }
  FourierMatrix synthesize() const { return {rows_, cols_, entries_.synthesize()}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  FourierField entries_;
};

/// theta -> x(theta + alpha), alpha in radians. Returns coefficients.
FourierField shift(const FourierField& x, std::span<const double> alpha);
FourierMatrix shift(const FourierMatrix& x, std::span<const double> alpha);

/// Mean value over the torus.
std::vector<double> average(const FourierField& x);

/// Sum of the trigonometric polynomial at an arbitrary point (radians).
std::vector<double> evaluate(const FourierField& x, std::span<const double> theta);

/// Real-form amplitudes of a stored coefficient: the function contains
/// cos_amp * cos<k,theta> + sin_amp * sin<k,theta> for this frequency pair.
struct RealAmplitude {
  double cos_amp;
  double sin_amp;
};
RealAmplitude real_amplitude(const Complex& coefficient, std::size_t grid_size);

/// Size of the last two resolved harmonics along each angle: for every
/// direction j, the largest Euclidean norm of the stacked (cos, sin)
/// amplitudes over all frequencies with |k_j| in {N_j - 1, N_j} (here N_j
/// is the half size).
std::vector<double> tail_norm(const FourierField& x);

}  // namespace qptori

#endif  // QPTORI_FOURIER_HPP
