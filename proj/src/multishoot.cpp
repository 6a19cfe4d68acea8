#include "qptori/multishoot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qptori/errors.hpp"
#include "qptori/pointwise.hpp"

namespace qptori {

namespace {

/// Components [first, first + count) of a field, in its representation.
FourierField components(const FourierField& x, std::size_t first, std::size_t count) {
  const std::size_t n = x.dim();
  if (x.is_grid()) {
    const auto v = x.values();
    const std::size_t M = x.mesh().grid_size();
    std::vector<double> out(M * count);
    for (std::size_t l = 0; l < M; ++l) {
      for (std::size_t c = 0; c < count; ++c) out[l * count + c] = v[l * n + first + c];
    }
    return FourierField::from_values(x.mesh(), count, std::move(out));
  }
  const auto v = x.coefficients();
  const std::size_t K = x.mesh().coeff_size();
  std::vector<Complex> out(K * count);
  for (std::size_t l = 0; l < K; ++l) {
    for (std::size_t c = 0; c < count; ++c) out[l * count + c] = v[l * n + first + c];
  }
  return FourierField::from_coefficients(x.mesh(), count, std::move(out));
}

/// Block (bi, bj) of size n of a matrix series, in its representation.
FourierMatrix block(const FourierMatrix& A, std::size_t bi, std::size_t bj, std::size_t n) {
  const std::size_t rows = A.rows();
  const FourierField& f = A.field();
  const std::size_t dim = f.dim();
  auto pick = [&](auto payload, std::size_t points, auto& out) {
    for (std::size_t l = 0; l < points; ++l) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          out[l * n * n + j * n + i] = payload[l * dim + (bj * n + j) * rows + bi * n + i];
        }
      }
    }
  };
  if (f.is_grid()) {
    const std::size_t M = f.mesh().grid_size();
    std::vector<double> out(M * n * n);
    pick(f.values(), M, out);
    return {n, n, FourierField::from_values(f.mesh(), n * n, std::move(out))};
  }
  const std::size_t K = f.mesh().coeff_size();
  std::vector<Complex> out(K * n * n);
  pick(f.coefficients(), K, out);
  return {n, n, FourierField::from_coefficients(f.mesh(), n * n, std::move(out))};
}

/// Assembles an (n r) x (n r) grid series from n x n grid blocks placed at
/// the given block positions; the rest is zero.
struct Placed {
  std::size_t row;
  std::size_t col;
  FourierMatrix grid;
};

FourierMatrix assemble(const Mesh& mesh, std::size_t n, int r, const std::vector<Placed>& blocks) {
  const std::size_t N = n * static_cast<std::size_t>(r);
  const std::size_t M = mesh.grid_size();
  std::vector<double> out(M * N * N, 0.0);
  for (const auto& b : blocks) {
    const FourierField g = b.grid.field().synthesize();
    const auto v = g.values();
    for (std::size_t l = 0; l < M; ++l) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          out[l * N * N + (b.col * n + j) * N + b.row * n + i] = v[l * n * n + j * n + i];
        }
      }
    }
  }
  return FourierMatrix(N, N, FourierField::from_values(mesh, N * N, std::move(out))).analyze();
}

std::vector<double> advanced(std::span<const double> theta, std::span<const double> step, int times) {
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += times * step[i];
  return out;
}

}  // namespace

std::shared_ptr<LiftedMap> lift_to_blocks(std::shared_ptr<const QPVectorField> field, int r,
                                          const IntegratorOptions& options) {
  if (r < 1) throw DomainError("number of sections must be at least 1");
  return std::make_shared<LiftedMap>(std::make_shared<PoincareMap>(std::move(field), options, r));
}

TorusSeed lifted_seed(const LiftedMap& map, const Mesh& mesh, std::span<const double> point) {
  const PoincareMap& base = map.base();
  const std::size_t n = base.dim();
  if (point.size() != n) throw std::invalid_argument("seed point has wrong dimension");
  const auto r = static_cast<std::size_t>(map.sections());
  const std::vector<double> theta(mesh.dims(), 0.0);
  std::vector<double> stacked(n * r);
  std::vector<double> x(point.begin(), point.end());
  for (std::size_t j = 0; j < r; ++j) {
    std::copy(x.begin(), x.end(), stacked.begin() + static_cast<std::ptrdiff_t>(j * n));
    if (j + 1 < r) base.apply_section(static_cast<int>(j) + 1, x, JetShape{}, theta);
  }
  return constant_seed(map, mesh, stacked);
}

MultiTorus split_sections(const TorusSolution& lifted, int r, double tol) {
  if (r < 1) throw DomainError("number of sections must be at least 1");
  const std::size_t N = lifted.dim();
  const auto ru = static_cast<std::size_t>(r);
  if (N % ru != 0) throw std::invalid_argument("lifted dimension is not a multiple of r");
  const std::size_t n = N / ru;

  MultiTorus out;
  out.sections = r;
  out.rotation = lifted.rotation;
  out.lifted = lifted;

  for (std::size_t bi = 0; bi < ru; ++bi) {
    for (std::size_t bj = 0; bj < ru; ++bj) {
      if (bi == bj) continue;
      const double off = max_norm(block(lifted.change, bi, bj, n).synthesize());
      if (off > tol) throw DomainError("Floquet change is not block diagonal");
    }
  }
  const double scale = std::max(1.0, lifted.floquet.norm());
  for (std::size_t bi = 0; bi < ru; ++bi) {
    for (std::size_t bj = 0; bj < ru; ++bj) {
      if (bi == (bj + 1) % ru) continue;
      const double off = lifted.floquet.block(static_cast<Eigen::Index>(bi * n), static_cast<Eigen::Index>(bj * n),
                                              static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))
                             .norm();
      if (off > tol * scale) throw DomainError("Floquet matrix is not block cyclic");
    }
  }

  for (std::size_t j = 0; j < ru; ++j) {
    out.tori.push_back(components(lifted.torus, j * n, n));
    out.changes.push_back(block(lifted.change, j, j, n));
    // B_j maps block j to block j + 1 (cyclically).
    out.matrices.push_back(lifted.floquet.block(static_cast<Eigen::Index>(((j + 1) % ru) * n),
                                                static_cast<Eigen::Index>(j * n),
                                                static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n)));
  }
  return out;
}

Eigen::MatrixXd block_permutation(std::size_t n, int r) {
  if (r < 1) throw DomainError("number of sections must be at least 1");
  const auto ru = static_cast<std::size_t>(r);
  const auto N = static_cast<Eigen::Index>(n * ru);
  const auto b = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(N, N);
  perm.block(0, (r - 1) * b, b, b).setIdentity();
  for (Eigen::Index i = 1; i < r; ++i) perm.block(i * b, (i - 1) * b, b, b).setIdentity();
  return perm;
}

BlockFloquet block_form(const MultiTorus& multi, const SkewMap& lifted_map) {
  const int r = multi.sections;
  const auto ru = static_cast<std::size_t>(r);
  const std::size_t n = multi.dim();
  const Mesh& mesh = multi.lifted.mesh();
  if (lifted_map.dim() != n * ru) throw std::invalid_argument("lifted map has wrong dimension");

  BlockFloquet out;
  out.A = sample_map(lifted_map, multi.lifted.torus).jacobian;

  const auto b = static_cast<Eigen::Index>(n);
  const auto N = static_cast<Eigen::Index>(n * ru);
  out.B = Eigen::MatrixXd::Zero(N, N);
  // Index helper for the 1-based section matrices.
  auto B = [&](int j) -> const Eigen::MatrixXd& { return multi.matrices[static_cast<std::size_t>(j - 1)]; };
  if (r == 1) {
    out.B = B(1);
  } else {
    out.B.block(0, (r - 1) * b, b, b) = B(r - 1);
    out.B.block(b, 0, b, b) = B(r);
    for (int i = 1; i <= r - 2; ++i) out.B.block((i + 1) * b, i * b, b, b) = B(i);
  }

  std::vector<Placed> c;
  std::vector<Placed> ci;
  for (std::size_t j = 1; j < ru; ++j) {
    c.push_back({j - 1, j, multi.changes[j - 1]});
    ci.push_back({j, j - 1, block(multi.lifted.change_inverse, j - 1, j - 1, n)});
  }
  c.push_back({ru - 1, 0, multi.changes[ru - 1]});
  ci.push_back({0, ru - 1, block(multi.lifted.change_inverse, ru - 1, ru - 1, n)});
  out.C = assemble(mesh, n, r, c);
  out.C_inverse = assemble(mesh, n, r, ci);
  return out;
}

double composition_error(const PoincareMap& map, std::span<const std::vector<double>> points,
                         std::span<const std::vector<double>> angles) {
  if (points.size() != angles.size()) throw std::invalid_argument("points and angles differ in count");
  const int r = map.sections();
  const std::vector<double>& step = map.section_rotation();
  double worst = 0.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<double> x = points[p];
    for (int j = 1; j <= r; ++j) {
      map.apply_section(j, x, JetShape{}, advanced(angles[p], step, j - 1));
    }
    const std::vector<double> whole = map.image(points[p], angles[p]);
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - whole[c]) * (x[c] - whole[c]);
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

ConsistencyReport spectral_consistency(const MultiTorus& multi, const TorusSolution& single,
                                       const PoincareMap& map, double tol, double composition_tol,
                                       std::size_t samples) {
  if (map.sections() != multi.sections) throw std::invalid_argument("map and torus differ in sections");
  if (single.dim() != multi.dim()) throw std::invalid_argument("tori differ in dimension");
  ConsistencyReport rep;
  rep.block_eigenvalues = floquet_eigenvalues(multi.lifted.floquet);
  const auto lambdas = floquet_eigenvalues(single.floquet);
  const int r = multi.sections;

  std::vector<std::complex<double>> powers;
  for (const auto& mu : rep.block_eigenvalues) powers.push_back(std::pow(mu, r));
  auto distance = [](const std::complex<double>& a, const std::complex<double>& lambda) {
    return std::abs(a - lambda) / std::abs(lambda);
  };
  for (const auto& p : powers) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : lambdas) best = std::min(best, distance(p, l));
    rep.spectral_mismatch = std::max(rep.spectral_mismatch, best);
  }
  for (const auto& l : lambdas) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : powers) best = std::min(best, distance(p, l));
    rep.coverage_mismatch = std::max(rep.coverage_mismatch, best);
  }

  const Mesh& mesh = single.mesh();
  const FourierField phi = single.torus.synthesize();
  const FourierField first = multi.tori.front().synthesize();
  const auto pv = phi.values();
  const auto fv = first.values();
  const std::size_t n = single.dim();
  for (std::size_t l = 0; l < mesh.grid_size(); ++l) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += (pv[l * n + c] - fv[l * n + c]) * (pv[l * n + c] - fv[l * n + c]);
    rep.torus_mismatch = std::max(rep.torus_mismatch, std::sqrt(s));
  }

  const std::size_t M = mesh.grid_size();
  const std::size_t stride = std::max<std::size_t>(1, M / std::max<std::size_t>(1, samples));
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> angles;
  for (std::size_t l = 0; l < M && points.size() < samples; l += stride) {
    points.emplace_back(pv.begin() + static_cast<std::ptrdiff_t>(l * n),
                        pv.begin() + static_cast<std::ptrdiff_t>((l + 1) * n));
    angles.push_back(mesh.grid_point(l));
  }
  rep.composition_error = composition_error(map, points, angles);
  rep.consistent = rep.spectral_mismatch <= tol && rep.coverage_mismatch <= tol &&
                   rep.composition_error <= composition_tol;
  return rep;
}

std::vector<ManifoldExpansion> split_manifold(const ManifoldExpansion& lifted, int r) {
  if (r < 1) throw DomainError("number of sections must be at least 1");
  const auto ru = static_cast<std::size_t>(r);
  const std::size_t N = lifted.dim();
  if (N % ru != 0) throw std::invalid_argument("lifted dimension is not a multiple of r");
  const std::size_t n = N / ru;
  std::vector<ManifoldExpansion> out;
  for (std::size_t j = 0; j < ru; ++j) {
    ManifoldExpansion e;
    e.branch = lifted.branch;
    e.eigenvalue = lifted.eigenvalue;
    e.eigenvector = lifted.eigenvector.segment(static_cast<Eigen::Index>(j * n), static_cast<Eigen::Index>(n));
    e.scaling = e.eigenvector.norm();
    e.rotation = lifted.rotation;
    for (const auto& a : lifted.stored) e.stored.push_back(components(a, j * n, n));
    e.order_residuals = lifted.order_residuals;
    e.order_errors = lifted.order_errors;
    e.transport_tails = lifted.transport_tails;
    e.warnings = lifted.warnings;
    e.cohomology = lifted.cohomology;
    e.rescaled = lifted.rescaled;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifoldExpansion> manifold_multishoot(const MultiTorus& multi, const SkewMap& lifted_map,
                                                   Branch branch, const ManifoldOptions& options,
                                                   ManifoldExpansion* lifted_out) {
  const EigenPair pair = eigen_pick(multi.lifted.floquet, branch, options.scaling);
  if (pair.value < 0.0) {
    throw SpectrumError("dominant block multiplier is negative; no positive real root of the single-shooting eigenvalue");
  }
  ManifoldExpansion lifted = compute_manifold(multi.lifted, lifted_map, branch, options);
  auto sections = split_manifold(lifted, multi.sections);
  if (lifted_out) *lifted_out = std::move(lifted);
  return sections;
}

int suggest_sections(const Eigen::MatrixXd& B) {
  const double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(B).singularValues()(0);
  if (!(norm > 1e4)) return 1;
  return static_cast<int>(std::ceil(std::log10(norm) / 2.0));
}

}  // namespace qptori
