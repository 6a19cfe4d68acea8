#ifndef QPTORI_TESTS_SUPPORT_HPP
#define QPTORI_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qptori/flowmap.hpp"
#include "qptori/fourier.hpp"
#include "qptori/jet.hpp"
#include "qptori/models.hpp"
#include "qptori/pointwise.hpp"
#include "qptori/torus.hpp"

namespace qptori::testing {

inline constexpr double kPi = std::numbers::pi;

/// d = 2 pendulum, alpha 0.8, eps 0.01, omega (1, sqrt 2, sqrt 3).
inline std::shared_ptr<const QPVectorField> desk_field(double eps = 0.01) {
  PendulumParams p;
  p.d = 2;
  p.eps = eps;
  return pendulum_field(p);
}

inline const PoincareMap& desk_map() {
  static const PoincareMap map(desk_field(), {}, 1);
  return map;
}

/// Converged desk torus on the 31 x 31 mesh, computed once per process.
inline const TorusSolution& desk_solution() {
  static const TorusSolution sol = [] {
    const Mesh mesh({31, 31});
    const double point[2] = {kPi, 0.0};
    return run_newton(desk_map(), constant_seed(desk_map(), mesh, point));
  }();
  return sol;
}

/// Field from a function of theta sampled on the grid.
inline FourierField sample(const Mesh& mesh, std::size_t n,
                           const std::function<std::vector<double>(std::span<const double>)>& f) {
  std::vector<double> values(mesh.grid_size() * n);
  for (std::size_t l = 0; l < mesh.grid_size(); ++l) {
    const auto theta = mesh.grid_point(l);
    const auto v = f(theta);
    for (std::size_t c = 0; c < n; ++c) values[l * n + c] = v[c];
  }
  return FourierField::from_values(mesh, n, std::move(values));
}

/// Smooth random field: coefficients decaying like exp(-|k|_1 / 2).
inline FourierField random_field(const Mesh& mesh, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Complex> c(mesh.coeff_size() * n);
  std::vector<int> kappa(mesh.dims());
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    mesh.packed_index_to_tuple(l, kappa);
    int norm1 = 0;
    for (int k : kappa) norm1 += std::abs(k);
    const double scale = static_cast<double>(mesh.grid_size()) * std::exp(-0.5 * norm1);
    for (std::size_t i = 0; i < n; ++i) c[l * n + i] = scale * Complex(normal(rng), normal(rng));
  }
  // Round trip through the grid restores the conjugate symmetry of the
  // self-conjugate modes.
  return FourierField::from_coefficients(mesh, n, std::move(c)).synthesize().analyze();
}

/// Random real matrix with real eigenvalues of the given moduli and signs,
/// conjugated by a well-conditioned random basis.
inline Eigen::MatrixXd random_hyperbolic(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> big(1.5, 4.0);
  std::uniform_real_distribution<double> small(0.25, 0.67);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd eig(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double s = unit(rng) < 0.0 ? -1.0 : 1.0;
    eig[static_cast<Eigen::Index>(i)] = s * ((i % 2 == 0) ? big(rng) : small(rng));
  }
  Eigen::MatrixXd Q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    for (Eigen::Index j = 0; j < Q.cols(); ++j) Q(i, j) = (i == j ? 2.0 : 0.0) + 0.5 * unit(rng);
  }
  return Q * eig.asDiagonal() * Q.inverse();
}

/// x -> A x + f(theta) with f chosen so that a prescribed circle phi is
/// invariant: f(theta) = phi(theta + rho) - A phi(theta).
class AffineSkewMap : public SkewMap {
 public:
  using Curve = std::function<std::vector<double>(std::span<const double>)>;

  AffineSkewMap(Eigen::MatrixXd A, std::vector<double> rho, Curve phi)
      : A_(std::move(A)), A_inv_(A_.inverse()), rho_(std::move(rho)), phi_(std::move(phi)) {}

  std::size_t dim() const override { return static_cast<std::size_t>(A_.rows()); }
  std::size_t angles() const override { return rho_.size(); }
  std::vector<double> rotation() const override { return rho_; }

  std::vector<double> forcing(std::span<const double> theta) const {
    std::vector<double> ahead(theta.begin(), theta.end());
    for (std::size_t i = 0; i < ahead.size(); ++i) ahead[i] += rho_[i];
    const auto next = phi_(ahead);
    const auto here = phi_(theta);
    const Eigen::Map<const Eigen::VectorXd> h(here.data(), A_.rows());
    Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(next.data(), A_.rows()) - A_ * h;
    return {f.data(), f.data() + f.size()};
  }

  void apply(std::span<double> state, const JetShape& shape, std::span<const double> theta) const override {
    const auto L = static_cast<Eigen::Index>(shape.size());
    Eigen::Map<Eigen::MatrixXd> X(state.data(), L, A_.rows());
    const Eigen::MatrixXd Y = X * A_.transpose();
    X = Y;
    const auto f = forcing(theta);
    for (Eigen::Index c = 0; c < A_.rows(); ++c) X(0, c) += f[static_cast<std::size_t>(c)];
  }

  void apply_inverse(std::span<double> state, const JetShape& shape,
                     std::span<const double> theta) const override {
    std::vector<double> back(theta.begin(), theta.end());
    for (std::size_t i = 0; i < back.size(); ++i) back[i] -= rho_[i];
    const auto f = forcing(back);
    const auto L = static_cast<Eigen::Index>(shape.size());
    Eigen::Map<Eigen::MatrixXd> X(state.data(), L, A_.rows());
    for (Eigen::Index c = 0; c < A_.rows(); ++c) X(0, c) -= f[static_cast<std::size_t>(c)];
    const Eigen::MatrixXd Y = X * A_inv_.transpose();
    X = Y;
  }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd A_inv_;
  std::vector<double> rho_;
  Curve phi_;
};

/// (x, y) -> (lambda x + a y^2, mu y + b x^2), independent of theta. The
/// origin is an invariant torus with Floquet matrix diag(lambda, mu); the
/// unstable manifold is (sigma, b sigma^2 / (lambda^2 - mu)) + O(sigma^3)
/// and the stable one (a sigma^2 / (mu^2 - lambda), sigma) + O(sigma^3).
class QuadraticSkewMap : public SkewMap {
 public:
  QuadraticSkewMap(double lambda, double mu, double a, double b, std::vector<double> rho)
      : lambda_(lambda), mu_(mu), a_(a), b_(b), rho_(std::move(rho)) {}

  std::size_t dim() const override { return 2; }
  std::size_t angles() const override { return rho_.size(); }
  std::vector<double> rotation() const override { return rho_; }

  void apply(std::span<double> state, const JetShape& shape, std::span<const double>) const override {
    const std::size_t L = shape.size();
    const Jet x = Jet::from_coefficients(shape, state.subspan(0, L));
    const Jet y = Jet::from_coefficients(shape, state.subspan(L, L));
    const Jet nx = lambda_ * x + a_ * (y * y);
    const Jet ny = mu_ * y + b_ * (x * x);
    store(state, nx, ny, L);
  }

  void apply_inverse(std::span<double> state, const JetShape& shape, std::span<const double>) const override {
    const std::size_t L = shape.size();
    const Jet nx = Jet::from_coefficients(shape, state.subspan(0, L));
    const Jet ny = Jet::from_coefficients(shape, state.subspan(L, L));
    // Fixed-point solve of the triangular-looking system; contraction for
    // small arguments, exact to round-off after enough sweeps.
    Jet x = nx / lambda_;
    Jet y = ny / mu_;
    for (int it = 0; it < 200; ++it) {
      x = (nx - a_ * (y * y)) / lambda_;
      y = (ny - b_ * (x * x)) / mu_;
    }
    store(state, x, y, L);
  }

  double unstable_quadratic() const { return b_ / (lambda_ * lambda_ - mu_); }
  double stable_quadratic() const { return a_ / (mu_ * mu_ - lambda_); }

 private:
  static void store(std::span<double> state, const Jet& x, const Jet& y, std::size_t L) {
    const auto xc = x.coefficients();
    const auto yc = y.coefficients();
    std::copy(xc.begin(), xc.end(), state.begin());
    std::copy(yc.begin(), yc.end(), state.begin() + static_cast<std::ptrdiff_t>(L));
  }

  double lambda_, mu_, a_, b_;
  std::vector<double> rho_;
};

/// Torus, change and Floquet matrix of the origin of a QuadraticSkewMap.
inline TorusSolution quadratic_origin(const Mesh& mesh, double lambda, double mu,
                                      std::span<const double> rho) {
  TorusSeed seed;
  const double zero[2] = {0.0, 0.0};
  seed.torus = FourierField::constant(mesh, zero);
  seed.change = FourierMatrix::identity(mesh, 2);
  seed.floquet = Eigen::Matrix2d{{lambda, 0.0}, {0.0, mu}};
  TorusSolution sol = make_solution(seed, rho);
  sol.converged = true;
  return sol;
}

/// Relative difference with a floor of 1 on the scale.
inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace qptori::testing

#endif  // QPTORI_TESTS_SUPPORT_HPP
