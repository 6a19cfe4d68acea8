#include "qptori/cohomology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qptori/errors.hpp"
#include "qptori/parallel.hpp"
#include "qptori/profile.hpp"

namespace qptori {

void CohomologyReport::merge(const CohomologyReport& other) {
  small_divisors.insert(small_divisors.end(), other.small_divisors.begin(),
                        other.small_divisors.end());
  max_condition = std::max(max_condition, other.max_condition);
}

namespace {

std::string kappa_text(const std::vector<int>& kappa) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < kappa.size(); ++i) os << (i ? "," : "") << kappa[i];
  os << ')';
  return os.str();
}

double frequency_phase(const Mesh& mesh, std::size_t l, std::span<const double> rho) {
  std::array<int, kMaxAngles> kappa{};
  const std::span<int> k(kappa.data(), mesh.dims());
  mesh.packed_index_to_tuple(l, k);
  double phase = 0.0;
  for (std::size_t j = 0; j < mesh.dims(); ++j) phase += k[j] * rho[j];
  return phase;
}

double norm1(const Eigen::MatrixXcd& M) { return M.cwiseAbs().colwise().sum().maxCoeff(); }

/// Runs one LU solve per stored frequency; block(l) returns the system
/// matrix, and the right-hand side / solution live at rhs(l) with `width`
/// entries. Conditioning is measured against `reference`, a bound on the
/// 1-norm of every block, so that a block that is small as a whole (a
/// scalar divisor near zero) counts as ill-conditioned. Raises on singular
/// blocks.
template <class BlockFn>
void solve_blocks(const Mesh& mesh, std::size_t width, std::vector<Complex>& data,
                  bool skip_mean, int order, double reference, BlockFn&& block,
                  CohomologyReport* report, const CohomologyOptions& options) {
  ScopedPhase timer(phase::kCohomology);
  std::vector<double> rcond(mesh.coeff_size(), 1.0);
  parallel_for(mesh.coeff_size(), [&](std::size_t l) {
    Complex* x = data.data() + l * width;
    if (skip_mean && l == 0) {
      std::fill(x, x + width, Complex(0.0));
      return;
    }
    const Eigen::MatrixXcd M = block(l);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    rcond[l] = lu.rcond() * (norm1(M) / reference);
    if (!(rcond[l] >= options.singular_rcond)) return;
    Eigen::Map<Eigen::VectorXcd> v(x, static_cast<Eigen::Index>(width));
    const Eigen::VectorXcd sol = lu.solve(v);
    v = sol;
  });
  CohomologyReport local;
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    if (skip_mean && l == 0) continue;
    const double r = rcond[l];
    if (!(r >= options.singular_rcond)) {
      const auto kappa = mesh.packed_index_to_tuple(l);
      throw ResonanceError("singular cohomological block at frequency " + kappa_text(kappa) +
                               (order > 0 ? " for order " + std::to_string(order) : ""),
                           kappa, order);
    }
    const double condition = 1.0 / r;
    local.max_condition = std::max(local.max_condition, condition);
    if (condition > options.warn_condition) {
      local.small_divisors.push_back({mesh.packed_index_to_tuple(l), r, order});
    }
  }
  if (report) report->merge(local);
}

}  // namespace

FourierField solve_shifted_cohomology(const FourierField& g, const Eigen::MatrixXd& B,
                                      std::span<const double> rho, double scale, int order,
                                      CohomologyReport* report,
                                      const CohomologyOptions& options) {
  const FourierField gc = g.analyze();
  const Mesh& mesh = gc.mesh();
  const std::size_t n = gc.dim();
  if (static_cast<std::size_t>(B.rows()) != n || static_cast<std::size_t>(B.cols()) != n) {
    throw std::invalid_argument("matrix size does not match the field dimension");
  }
  if (rho.size() != mesh.dims()) throw std::invalid_argument("rotation has wrong length");
  std::vector<Complex> data(gc.coefficients().begin(), gc.coefficients().end());
  const Eigen::MatrixXcd Bc = B.cast<Complex>();
  const auto I = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  solve_blocks(
      mesh, n, data, false, order, std::abs(scale) + norm1(Bc),
      [&](std::size_t l) -> Eigen::MatrixXcd {
        const Complex e = scale * std::polar(1.0, frequency_phase(mesh, l, rho));
        return e * I - Bc;
      },
      report, options);
  return FourierField::from_coefficients(mesh, n, std::move(data));
}

FourierField solve_torus_cohomology(const FourierField& g, const Eigen::MatrixXd& B,
                                    std::span<const double> rho, CohomologyReport* report,
                                    const CohomologyOptions& options) {
  return solve_shifted_cohomology(g, B, rho, 1.0, 0, report, options);
}

FourierField solve_manifold_cohomology(const FourierField& g, const Eigen::MatrixXd& B,
                                       std::span<const double> rho, double lambda, int m,
                                       CohomologyReport* report,
                                       const CohomologyOptions& options) {
  return solve_shifted_cohomology(g, B, rho, std::pow(lambda, m), m, report, options);
}

FourierMatrix solve_floquet_cohomology(const FourierMatrix& R, const Eigen::MatrixXd& B,
                                       std::span<const double> rho, CohomologyReport* report,
                                       const CohomologyOptions& options) {
  const std::size_t n = R.rows();
  if (R.cols() != n || static_cast<std::size_t>(B.rows()) != n ||
      static_cast<std::size_t>(B.cols()) != n) {
    throw std::invalid_argument("Floquet equation needs square matrices of one size");
  }
  const FourierField rc = R.field().analyze();
  const Mesh& mesh = rc.mesh();
  if (rho.size() != mesh.dims()) throw std::invalid_argument("rotation has wrong length");
  std::vector<Complex> data(rc.coefficients().begin(), rc.coefficients().end());
  const auto ni = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(ni, ni);
  const Eigen::MatrixXcd Bc = B.cast<Complex>();
  // Column-major vec: vec(X B) = (B^T kron I) vec X, vec(B X) = (I kron B) vec X.
  Eigen::MatrixXcd right(ni * ni, ni * ni);
  Eigen::MatrixXcd left(ni * ni, ni * ni);
  for (Eigen::Index a = 0; a < ni; ++a) {
    for (Eigen::Index b = 0; b < ni; ++b) {
      right.block(a * ni, b * ni, ni, ni) = Bc(b, a) * I;
      left.block(a * ni, b * ni, ni, ni) = (a == b) ? Bc : Eigen::MatrixXcd::Zero(ni, ni);
    }
  }
  solve_blocks(
      mesh, n * n, data, true, 0, norm1(right) + norm1(left),
      [&](std::size_t l) -> Eigen::MatrixXcd {
        const Complex e = std::polar(1.0, frequency_phase(mesh, l, rho));
        return e * right - left;
      },
      report, options);
  return {n, n, FourierField::from_coefficients(mesh, n * n, std::move(data))};
}

}  // namespace qptori
