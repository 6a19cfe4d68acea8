#include "qptori/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qptori/errors.hpp"
#include "qptori/pointwise.hpp"

namespace qptori {

const char* branch_name(Branch b) { return b == Branch::kStable ? "stable" : "unstable"; }

Branch parse_branch(const std::string& name) {
  if (name == "stable") return Branch::kStable;
  if (name == "unstable") return Branch::kUnstable;
  throw DomainError("unknown manifold branch '" + name + "'");
}

EigenPair eigen_pick(const Eigen::MatrixXd& B, Branch branch, double scaling) {
  if (B.rows() != B.cols() || B.rows() == 0) throw std::invalid_argument("B must be square");
  if (!(scaling > 0.0)) throw DomainError("eigenvector scaling must be positive");
  Eigen::EigenSolver<Eigen::MatrixXd> es(B, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  const bool unstable = branch == Branch::kUnstable;
  int best = -1;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double mod = std::abs(ev[i]);
    if (std::abs(ev[i].imag()) > 1e-12 * std::max(1.0, mod)) continue;
    if (unstable ? !(mod > 1.0) : !(mod < 1.0) || mod == 0.0) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const double best_mod = std::abs(ev[best]);
    // Equal moduli (the roots +mu and -mu of a lifted problem): prefer the
    // positive one.
    if (std::abs(mod - best_mod) <= 1e-9 * best_mod) {
      if (ev[i].real() > ev[best].real()) best = static_cast<int>(i);
    } else if (unstable ? mod > best_mod : mod < best_mod) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) {
    throw SpectrumError(std::string("Floquet matrix has no real ") + branch_name(branch) +
                        " eigenvalue");
  }
  const double lambda = ev[best].real();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (i != best && std::abs(ev[i] - ev[best]) <= 1e-8 * std::abs(lambda)) {
      throw SpectrumError("selected eigenvalue is not simple");
    }
  }
  const auto n = B.rows();
  const Eigen::MatrixXd shifted = B - lambda * Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted, Eigen::ComputeFullV);
  Eigen::VectorXd v = svd.matrixV().col(n - 1);
  Eigen::Index largest = 0;
  v.cwiseAbs().maxCoeff(&largest);
  if (v[largest] < 0.0) v = -v;
  v *= scaling / v.norm();
  return {lambda, v};
}

FourierField ManifoldExpansion::coefficient(int k) const {
  if (k < 0 || k > order()) throw DomainError("manifold order out of range");
  if (branch == Branch::kStable) {
    std::vector<double> back(rotation.size());
    for (std::size_t i = 0; i < back.size(); ++i) back[i] = -rotation[i];
    return shift(stored[static_cast<std::size_t>(k)], back);
  }
  return stored[static_cast<std::size_t>(k)].analyze();
}

std::vector<double> ManifoldExpansion::evaluate(std::span<const double> theta, double sigma) const {
  std::vector<double> point(theta.begin(), theta.end());
  if (branch == Branch::kStable) {
    for (std::size_t i = 0; i < point.size(); ++i) point[i] -= rotation[i];
  }
  std::vector<double> out(dim(), 0.0);
  double power = 1.0;
  for (const auto& a : stored) {
    const auto value = qptori::evaluate(a, point);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += power * value[c];
    power *= sigma;
  }
  return out;
}

namespace {

FourierMatrix constant_matrix(const Mesh& mesh, const Eigen::MatrixXd& M) {
  const std::vector<double> entries(M.data(), M.data() + M.size());
  return {static_cast<std::size_t>(M.rows()), static_cast<std::size_t>(M.cols()),
          FourierField::constant(mesh, entries)};
}

FourierField scaled(const FourierField& x, double s) { return combine(s, x, 0.0, x); }

/// Pushes the series sum_j terms[j] sigma^j (j < terms.size()) through the
/// map at every mesh point theta + offset, truncated at `order`, and returns
/// the grid values of each power of sigma in the image.
std::vector<FourierField> transport_series(const SkewMap& map, const std::vector<FourierField>& terms,
                                           int order, std::span<const double> offset,
                                           bool inverse) {
  const Mesh& mesh = terms.front().mesh();
  const std::size_t n = map.dim();
  const JetShape shape{1, order};
  const std::size_t L = shape.size();
  const std::size_t M = mesh.grid_size();
  std::vector<double> states(M * n * L, 0.0);
  for (std::size_t j = 0; j < terms.size() && j < L; ++j) {
    const FourierField grid = terms[j].synthesize();
    const auto v = grid.values();
    for (std::size_t l = 0; l < M; ++l) {
      for (std::size_t c = 0; c < n; ++c) states[(l * n + c) * L + j] = v[l * n + c];
    }
  }
  transport_on_mesh(map, mesh, shape, states, offset, inverse);
  std::vector<FourierField> out;
  out.reserve(L);
  for (std::size_t j = 0; j < L; ++j) {
    std::vector<double> values(M * n);
    for (std::size_t l = 0; l < M; ++l) {
      for (std::size_t c = 0; c < n; ++c) values[l * n + c] = states[(l * n + c) * L + j];
    }
    out.push_back(FourierField::from_values(mesh, n, std::move(values)));
  }
  return out;
}

double largest(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

ManifoldExpansion expand(const TorusSolution& sol, const SkewMap& map, Branch branch,
                         const ManifoldOptions& options) {
  if (options.order < 1) throw DomainError("manifold order must be at least 1");
  const std::size_t n = sol.dim();
  if (map.dim() != n) throw std::invalid_argument("torus dimension does not match the map");
  const Mesh& mesh = sol.mesh();
  const bool stable = branch == Branch::kStable;
  const std::vector<double>& rho = sol.rotation;

  ManifoldExpansion exp;
  exp.branch = branch;
  const EigenPair pair = eigen_pick(sol.floquet, branch, options.scaling);
  exp.eigenvalue = pair.value;
  exp.eigenvector = pair.vector;
  exp.scaling = options.scaling;
  exp.rotation = rho;

  const std::vector<double> v(pair.vector.data(), pair.vector.data() + pair.vector.size());
  const FourierField a0 = sol.torus.analyze();
  const FourierField a1 = multiply(sol.change, FourierField::constant(mesh, v)).analyze();
  exp.stored.push_back(stable ? shift(a0, rho) : a0);
  exp.stored.push_back(stable ? shift(a1, rho) : a1);
  exp.transport_tails.assign(2, 0.0);

  const std::vector<double> offset = stable ? rho : std::vector<double>(mesh.dims(), 0.0);
  // C^{-1} at the fiber where b_k lives after the map: theta + rho forward,
  // theta for the inverse map started at theta + rho.
  const FourierMatrix cinv = stable ? sol.change_inverse : shift(sol.change_inverse, rho);
  const FourierMatrix Bfield = constant_matrix(mesh, sol.floquet);
  const double lambda = exp.eigenvalue;

  for (int k = 2; k <= options.order; ++k) {
    const auto tables = transport_series(map, exp.stored, k, offset, stable);
    const FourierField& b = tables[static_cast<std::size_t>(k)];
    const double tail = largest(tail_norm(b.analyze())) / std::max(1.0, max_norm(b));
    exp.transport_tails.push_back(tail);
    if (tail > options.tail_error) {
      std::ostringstream os;
      os << "order " << k << " term is under-resolved on the mesh (relative tail " << tail << ")";
      throw ResolutionError(os.str());
    }
    if (tail > options.tail_warn) {
      std::ostringstream os;
      os << "order " << k << ": relative tail " << tail << " exceeds " << options.tail_warn
         << "; a finer mesh is advisable";
      exp.warnings.push_back(os.str());
    }
    FourierField g = multiply(cinv, b);
    if (stable) g = scaled(multiply(Bfield, g), -std::pow(lambda, k));
    const FourierField u =
        solve_manifold_cohomology(g, sol.floquet, rho, lambda, k, &exp.cohomology, options.cohomology);
    const FourierField a = multiply(sol.change, u).analyze();
    exp.stored.push_back(stable ? shift(a, rho) : a);
  }
  measure_order_errors(exp, map);
  return exp;
}

}  // namespace

namespace {

/// Absolute residuals per order of the expansion re-parametrized by
/// theta -> theta + gamma, and the norms they are made relative to.
void order_residuals_at(const ManifoldExpansion& expansion, const SkewMap& map,
                        std::span<const double> gamma, std::vector<double>& residuals,
                        std::vector<double>& norms) {
  const bool stable = expansion.branch == Branch::kStable;
  const Mesh& mesh = expansion.mesh();
  if (gamma.size() != mesh.dims()) throw std::invalid_argument("shift has wrong length");
  const std::vector<double>& rho = expansion.rotation;
  std::vector<double> offset(gamma.begin(), gamma.end());
  if (stable) {
    for (std::size_t i = 0; i < offset.size(); ++i) offset[i] += rho[i];
  }
  std::vector<FourierField> terms;
  for (const auto& a : expansion.stored) terms.push_back(shift(a, gamma));
  const int m = expansion.order();
  const auto tables = transport_series(map, terms, m, offset, stable);
  const double multiplier = stable ? 1.0 / expansion.eigenvalue : expansion.eigenvalue;
  std::vector<double> target_shift(rho);
  if (stable) {
    for (auto& a : target_shift) a = -a;
  }
  residuals.assign(static_cast<std::size_t>(m) + 1, 0.0);
  norms.assign(static_cast<std::size_t>(m) + 1, 0.0);
  for (int j = 0; j <= m; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const FourierField target = shift(terms[ju], target_shift);
    residuals[ju] = max_norm(combine(std::pow(multiplier, -j), tables[ju], -1.0, target));
    norms[ju] = max_norm(target);
  }
}

}  // namespace

void measure_order_errors(ManifoldExpansion& expansion, const SkewMap& map) {
  std::vector<double> norms;
  const std::vector<double> zero(expansion.mesh().dims(), 0.0);
  order_residuals_at(expansion, map, zero, expansion.order_residuals, norms);
  expansion.order_errors.resize(norms.size());
  for (std::size_t j = 0; j < norms.size(); ++j) {
    expansion.order_errors[j] = expansion.order_residuals[j] / std::max(1.0, norms[j]);
  }
}

std::vector<double> order_errors_at(const ManifoldExpansion& expansion, const SkewMap& map,
                                    std::span<const double> gamma) {
  std::vector<double> residuals;
  std::vector<double> norms;
  order_residuals_at(expansion, map, gamma, residuals, norms);
  for (std::size_t j = 0; j < norms.size(); ++j) residuals[j] /= std::max(1.0, norms[j]);
  return residuals;
}

ManifoldExpansion unstable_expansion(const TorusSolution& sol, const SkewMap& map,
                                     const ManifoldOptions& options) {
  return expand(sol, map, Branch::kUnstable, options);
}

ManifoldExpansion stable_expansion(const TorusSolution& sol, const SkewMap& map,
                                   const ManifoldOptions& options) {
  return expand(sol, map, Branch::kStable, options);
}

ManifoldExpansion compute_manifold(const TorusSolution& sol, const SkewMap& map, Branch branch,
                                   const ManifoldOptions& options) {
  ManifoldExpansion exp = expand(sol, map, branch, options);
  if (!options.auto_scaling) return exp;
  const double radius = estimate_radius(exp);
  if (std::isfinite(radius) && radius >= options.auto_low && radius <= options.auto_high) {
    return exp;
  }
  if (!std::isfinite(radius) || !(radius > 0.0)) return exp;
  ManifoldOptions again = options;
  again.scaling = options.scaling * radius;
  again.auto_scaling = false;
  ManifoldExpansion redone = expand(sol, map, branch, again);
  redone.rescaled = true;
  return redone;
}

ManifoldExpansion rescale(const ManifoldExpansion& expansion, double c) {
  if (!(c != 0.0) || !std::isfinite(c)) throw DomainError("scaling factor must be finite and nonzero");
  ManifoldExpansion out = expansion;
  double power = 1.0;
  for (std::size_t k = 0; k < out.stored.size(); ++k) {
    if (k > 0) {
      const FourierField a = out.stored[k].analyze();
      std::vector<Complex> c(a.coefficients().begin(), a.coefficients().end());
      for (auto& z : c) z *= power;
      out.stored[k] = FourierField::from_coefficients(a.mesh(), a.dim(), std::move(c));
      if (k < out.order_residuals.size()) {
        out.order_residuals[k] *= std::abs(power);
        out.order_errors[k] =
            out.order_residuals[k] / std::max(1.0, max_norm(out.coefficient(static_cast<int>(k))));
      }
    }
    power *= c;
  }
  out.eigenvector *= c;
  out.scaling *= std::abs(c);
  return out;
}

double estimate_radius(const ManifoldExpansion& expansion) {
  const int m = expansion.order();
  if (m < 1) return std::numeric_limits<double>::infinity();
  const int first = std::max(1, (m + 1) / 2);
  std::vector<double> ks;
  std::vector<double> logs;
  for (int k = first; k <= m; ++k) {
    const double norm = max_norm(expansion.stored[static_cast<std::size_t>(k)]);
    if (norm > 0.0) {
      ks.push_back(k);
      logs.push_back(std::log(norm));
    }
  }
  if (ks.empty()) return std::numeric_limits<double>::infinity();
  if (ks.size() == 1) return std::exp(-logs[0] / ks[0]);
  double km = 0.0;
  double lm = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    km += ks[i];
    lm += logs[i];
  }
  km /= static_cast<double>(ks.size());
  lm /= static_cast<double>(ks.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    num += (ks[i] - km) * (logs[i] - lm);
    den += (ks[i] - km) * (ks[i] - km);
  }
  return std::exp(-num / den);
}

FourierField stored_on_grid(const ManifoldExpansion& expansion, double sigma) {
  const Mesh& mesh = expansion.mesh();
  const std::size_t n = expansion.dim();
  std::vector<double> out(mesh.grid_size() * n, 0.0);
  double power = 1.0;
  for (const auto& a : expansion.stored) {
    const FourierField grid = a.synthesize();
    const auto v = grid.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += power * v[i];
    power *= sigma;
  }
  return FourierField::from_values(mesh, n, std::move(out));
}

}  // namespace qptori
