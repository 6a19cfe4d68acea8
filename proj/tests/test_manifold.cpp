#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qptori/errors.hpp"
#include "qptori/manifold.hpp"
#include "qptori/pointwise.hpp"
#include "support.hpp"

using namespace qptori;
using qptori::testing::kPi;

namespace {

const ManifoldExpansion& desk_manifold(Branch branch) {
  static const ManifoldExpansion unstable = [] {
    ManifoldOptions o;
    o.order = 6;
    return unstable_expansion(qptori::testing::desk_solution(), qptori::testing::desk_map(), o);
  }();
  static const ManifoldExpansion stable = [] {
    ManifoldOptions o;
    o.order = 6;
    return stable_expansion(qptori::testing::desk_solution(), qptori::testing::desk_map(), o);
  }();
  return branch == Branch::kUnstable ? unstable : stable;
}

double max_diff(const FourierField& a, const FourierField& b) { return max_norm(combine(1.0, a, -1.0, b)); }

std::vector<std::vector<double>> random_angles(std::size_t count, std::size_t d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::vector<std::vector<double>> out(count, std::vector<double>(d));
  for (auto& t : out) {
    for (auto& a : t) a = angle(rng);
  }
  return out;
}

}  // namespace

TEST(EigenPick, DiagonalMatrix) {
  const Eigen::MatrixXd B = Eigen::Vector2d(2.0, 0.5).asDiagonal();
  const auto u = eigen_pick(B, Branch::kUnstable);
  EXPECT_EQ(u.value, 2.0);
  EXPECT_NEAR(u.vector[0], 1.0, 1e-15);
  EXPECT_NEAR(u.vector[1], 0.0, 1e-15);
  const auto s = eigen_pick(B, Branch::kStable, 3.0);
  EXPECT_EQ(s.value, 0.5);
  EXPECT_NEAR(s.vector[0], 0.0, 1e-15);
  EXPECT_NEAR(s.vector[1], 3.0, 1e-15);
}

TEST(EigenPick, EqualModulusPrefersPositive) {
  const Eigen::MatrixXd B = Eigen::Vector3d(-3.0, 3.0, 0.1).asDiagonal();
  EXPECT_EQ(eigen_pick(B, Branch::kUnstable).value, 3.0);
}

TEST(EigenPick, RejectsMissingRealEigenvalue) {
  Eigen::MatrixXd rotation(2, 2);
  rotation << 0.0, -2.0, 2.0, 0.0;
  EXPECT_THROW(eigen_pick(rotation, Branch::kUnstable), SpectrumError);
  const Eigen::MatrixXd expanding = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  EXPECT_THROW(eigen_pick(expanding, Branch::kStable), SpectrumError);
  EXPECT_THROW(eigen_pick(expanding, Branch::kUnstable, 0.0), DomainError);
}

TEST(EigenPick, PendulumEigenResidual) {
  const auto& B = qptori::testing::desk_solution().floquet;
  for (Branch b : {Branch::kUnstable, Branch::kStable}) {
    const auto p = eigen_pick(B, b);
    EXPECT_NEAR(p.vector.norm(), 1.0, 1e-14);
    EXPECT_LE((B * p.vector - p.value * p.vector).norm(), 1e-10 * p.vector.norm());
  }
  EXPECT_GT(eigen_pick(B, Branch::kUnstable).value, 270.0);
}

TEST(Branch, Names) {
  EXPECT_EQ(parse_branch("stable"), Branch::kStable);
  EXPECT_EQ(parse_branch("unstable"), Branch::kUnstable);
  EXPECT_STREQ(branch_name(Branch::kStable), "stable");
  EXPECT_THROW(parse_branch("center"), DomainError);
}

TEST(Unstable, LowOrdersComeFromTorusAndEigenvector) {
  const auto& sol = qptori::testing::desk_solution();
  const auto& e = desk_manifold(Branch::kUnstable);
  ASSERT_EQ(e.order(), 6);
  EXPECT_LE(max_diff(e.coefficient(0), sol.torus), 1e-14);
  const auto Cv = multiply(sol.change, FourierField::constant(sol.mesh(), {e.eigenvector.data(), 2}));
  EXPECT_LE(max_diff(e.coefficient(1), Cv), 1e-13);
  EXPECT_LE(e.order_errors[1], 1e-12);
}

TEST(Unstable, PerOrderErrors) {
  const auto& e = desk_manifold(Branch::kUnstable);
  ASSERT_EQ(e.order_errors.size(), 7u);
  for (int k = 0; k <= 6; ++k) EXPECT_LE(e.order_errors[static_cast<std::size_t>(k)], 1e-10) << "order " << k;
  EXPECT_TRUE(e.cohomology.small_divisors.empty());
  EXPECT_LT(e.cohomology.max_condition, 1e8);
}

TEST(Unstable, RemeasuredErrorsAgree) {
  auto e = desk_manifold(Branch::kUnstable);
  const auto recorded = e.order_errors;
  measure_order_errors(e, qptori::testing::desk_map());
  for (std::size_t k = 0; k < recorded.size(); ++k) EXPECT_NEAR(e.order_errors[k], recorded[k], 1e-12);
  const double zero[2] = {0.0, 0.0};
  const auto at_zero = order_errors_at(e, qptori::testing::desk_map(), zero);
  for (std::size_t k = 0; k < recorded.size(); ++k) EXPECT_NEAR(at_zero[k], e.order_errors[k], 1e-12);
}

TEST(Unstable, DirectInvariance) {
  const auto& e = desk_manifold(Branch::kUnstable);
  const auto& map = qptori::testing::desk_map();
  const auto rho = map.rotation();
  const double sigma = 1e-5;
  for (const auto& th : random_angles(5, 2, 1)) {
    const auto img = map.image(e.evaluate(th, sigma), th);
    const std::vector<double> ahead = {th[0] + rho[0], th[1] + rho[1]};
    const auto w = e.evaluate(ahead, e.eigenvalue * sigma);
    EXPECT_LE(std::hypot(img[0] - w[0], img[1] - w[1]), 1e-10);
  }
}

TEST(Stable, StoresShiftedCoefficients) {
  const auto& sol = qptori::testing::desk_solution();
  const auto& e = desk_manifold(Branch::kStable);
  EXPECT_LT(e.eigenvalue, 1.0);
  EXPECT_LE(max_diff(e.stored[0], shift(sol.torus, sol.rotation)), 1e-14);
  EXPECT_LE(max_diff(e.coefficient(0), sol.torus), 1e-14);
  const auto Cv = multiply(sol.change, FourierField::constant(sol.mesh(), {e.eigenvector.data(), 2}));
  EXPECT_LE(max_diff(e.coefficient(1), Cv), 1e-13);
}

TEST(Stable, DirectInvarianceContractsParameter) {
  const auto& e = desk_manifold(Branch::kStable);
  const auto& map = qptori::testing::desk_map();
  const auto rho = map.rotation();
  const double sigma = 1e-3;
  for (const auto& th : random_angles(8, 2, 2)) {
    const auto img = map.image(e.evaluate(th, sigma), th);
    const std::vector<double> ahead = {th[0] + rho[0], th[1] + rho[1]};
    const auto w = e.evaluate(ahead, e.eigenvalue * sigma);
    EXPECT_LE(std::hypot(img[0] - w[0], img[1] - w[1]), 1e-10);
  }
}

TEST(Stable, ProfileComparableToUnstable) {
  const auto& u = desk_manifold(Branch::kUnstable);
  const auto& s = desk_manifold(Branch::kStable);
  double worst_u = 0.0, worst_s = 0.0;
  for (std::size_t k = 0; k < s.order_errors.size(); ++k) {
    EXPECT_LE(s.order_errors[k], 1e-10) << "order " << k;
    worst_u = std::max(worst_u, u.order_errors[k]);
    worst_s = std::max(worst_s, s.order_errors[k]);
  }
  // Same band up to the extra 1 / |lambda_s| the stable order-1 term picks
  // up from the Floquet residual.
  const double amplification = 1.0 / std::abs(s.eigenvalue);
  EXPECT_LE(worst_s, 10.0 * amplification * std::max(worst_u, 1e-14));
  EXPECT_LE(worst_u, 100.0 * std::max(worst_s, 1e-14));
}

TEST(Stable, UnforcedTimeReversal) {
  // x'' = -alpha sin x is reversible under (x, y, t) -> (x, -y, -t), so the
  // stable parametrization is the mirror of the unstable one, up to the
  // sign of sigma.
  const PoincareMap map(qptori::testing::desk_field(0.0));
  const Mesh mesh({5, 5});
  const double point[2] = {kPi, 0.0};
  const auto sol = run_newton(map, constant_seed(map, mesh, point));
  ManifoldOptions o;
  o.order = 6;
  const auto u = unstable_expansion(sol, map, o);
  const auto s = stable_expansion(sol, map, o);
  EXPECT_NEAR(s.eigenvalue * u.eigenvalue, 1.0, 1e-10);
  const double theta[2] = {0.0, 0.0};
  const auto u1 = evaluate(u.coefficient(1), theta);
  const auto s1 = evaluate(s.coefficient(1), theta);
  const double sign = (s1[0] * u1[0] - s1[1] * u1[1]) >= 0.0 ? 1.0 : -1.0;
  double factor = 1.0;
  for (int k = 0; k <= 6; ++k) {
    const auto uk = evaluate(u.coefficient(k), theta);
    const auto sk = evaluate(s.coefficient(k), theta);
    const double scale = std::max({1.0, std::abs(uk[0]), std::abs(uk[1])});
    EXPECT_NEAR(sk[0], factor * uk[0], 1e-8 * scale) << "order " << k;
    EXPECT_NEAR(sk[1], -factor * uk[1], 1e-8 * scale) << "order " << k;
    factor *= sign;
  }
}

TEST(Quadratic, ExactSecondOrderCoefficients) {
  const double rho[1] = {1.0};
  const qptori::testing::QuadraticSkewMap map(3.0, 0.25, 0.7, 1.3, {1.0});
  const Mesh mesh({5});
  const auto sol = qptori::testing::quadratic_origin(mesh, 3.0, 0.25, rho);
  ManifoldOptions o;
  o.order = 4;
  const auto u = unstable_expansion(sol, map, o);
  const auto s = stable_expansion(sol, map, o);
  EXPECT_EQ(u.eigenvalue, 3.0);
  EXPECT_EQ(s.eigenvalue, 0.25);
  for (const auto& th : random_angles(3, 1, 3)) {
    const auto u2 = evaluate(u.coefficient(2), th);
    const auto s2 = evaluate(s.coefficient(2), th);
    EXPECT_NEAR(u2[0], 0.0, 1e-14);
    EXPECT_NEAR(u2[1], map.unstable_quadratic(), 1e-14);
    EXPECT_NEAR(s2[0], map.stable_quadratic(), 1e-14);
    EXPECT_NEAR(s2[1], 0.0, 1e-14);
  }
  for (double err : u.order_errors) EXPECT_LE(err, 1e-13);
  for (double err : s.order_errors) EXPECT_LE(err, 1e-13);
}

TEST(Rescale, IdentityAndGroupAction) {
  const auto& e = desk_manifold(Branch::kUnstable);
  const auto same = rescale(e, 1.0);
  for (int k = 0; k <= e.order(); ++k) EXPECT_EQ(max_diff(same.coefficient(k), e.coefficient(k)), 0.0);
  const auto back = rescale(rescale(e, 2.0), 0.5);
  for (int k = 0; k <= e.order(); ++k) {
    const double scale = std::max(1.0, max_norm(e.coefficient(k)));
    EXPECT_LE(max_diff(back.coefficient(k), e.coefficient(k)), 1e-13 * scale) << "order " << k;
  }
  EXPECT_THROW(rescale(e, 0.0), DomainError);
}

TEST(Rescale, SameManifoldInScaledParameter) {
  for (Branch b : {Branch::kUnstable, Branch::kStable}) {
    const auto& e = desk_manifold(b);
    const double c = 3.7;
    const auto r = rescale(e, c);
    EXPECT_NEAR(r.scaling, c * e.scaling, 1e-15);
    for (const auto& th : random_angles(4, 2, 4)) {
      for (double sigma : {0.05, -0.3, 0.8}) {
        const auto w = e.evaluate(th, sigma);
        const auto v = r.evaluate(th, sigma / c);
        EXPECT_LE(std::hypot(w[0] - v[0], w[1] - v[1]), 1e-12);
      }
    }
  }
}

TEST(Radius, GeometricSeries) {
  const Mesh mesh({3});
  for (double radius : {0.37, 4.0, 55.0}) {
    ManifoldExpansion e;
    e.eigenvalue = 2.0;
    e.eigenvector = Eigen::Vector2d(1.0, 0.0);
    e.rotation = {1.0};
    for (int k = 0; k <= 10; ++k) {
      const double a = 1.7 * std::pow(radius, -k);
      const double v[2] = {a, -0.5 * a};
      e.stored.push_back(FourierField::constant(mesh, v));
    }
    EXPECT_NEAR(estimate_radius(e), radius, 0.1 * radius);
  }
}

TEST(Scaling, AutomaticPolicyRescales) {
  ManifoldOptions o;
  o.order = 6;
  o.auto_scaling = true;
  const auto e = compute_manifold(qptori::testing::desk_solution(), qptori::testing::desk_map(),
                                  Branch::kUnstable, o);
  const double first = estimate_radius(desk_manifold(Branch::kUnstable));
  if (first < o.auto_low || first > o.auto_high) {
    EXPECT_TRUE(e.rescaled);
    EXPECT_NEAR(e.scaling, first, 1e-9 * first);
    EXPECT_GE(estimate_radius(e), o.auto_low);
    EXPECT_LE(estimate_radius(e), o.auto_high);
  } else {
    EXPECT_FALSE(e.rescaled);
  }
  for (double err : e.order_errors) EXPECT_LE(err, 1e-10);
}

TEST(Resolution, TailLimitsEscalate) {
  const auto& sol = qptori::testing::desk_solution();
  const auto& map = qptori::testing::desk_map();
  ManifoldOptions o;
  o.order = 2;
  o.tail_warn = 1e-30;
  const auto e = unstable_expansion(sol, map, o);
  EXPECT_FALSE(e.warnings.empty());
  o.tail_error = 1e-29;
  EXPECT_THROW(unstable_expansion(sol, map, o), ResolutionError);
  o.order = 0;
  EXPECT_THROW(unstable_expansion(sol, map, o), DomainError);
}
