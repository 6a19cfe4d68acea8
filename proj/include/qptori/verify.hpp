#ifndef QPTORI_VERIFY_HPP
#define QPTORI_VERIFY_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qptori/flowmap.hpp"
#include "qptori/fourier.hpp"
#include "qptori/manifold.hpp"
#include "qptori/torus.hpp"

namespace qptori {

/// Default test tolerance.
inline constexpr double kDefaultTolerance = 1e-10;

struct TestReport {
  /// 1 invariance, 2 tail, 3 shifted invariance, 4 order of contact.
  int id = 0;
  std::string name;
  std::vector<double> measured;
  double tolerance = kDefaultTolerance;
  bool passed = false;
  std::string context;
};

/// Residual norms of an invariance equation for the object re-parametrized
/// by theta -> theta + gamma (radians), evaluated on the mesh. An empty
/// gamma means no shift.
using Equation = std::function<std::vector<double>(std::span<const double> gamma)>;

/// |phi(theta + rho) - P(phi(theta), theta)|, absolute.
Equation torus_equation(const TorusSolution& sol, const SkewMap& map);
/// |C^{-1}(theta + rho) D_xP(phi(theta), theta) C(theta) - B|_F, absolute.
Equation floquet_equation(const TorusSolution& sol, const SkewMap& map);
/// Relative per-order errors of a manifold expansion.
Equation manifold_equation(const ManifoldExpansion& expansion, const SkewMap& map);

/// Test 1: every value of equation(0) is at most tau.
TestReport test_invariance(const Equation& equation, double tau = kDefaultTolerance,
                           const std::string& context = {});
/// Test 2: per-direction tail of the series at most tau.
TestReport test_tail(const FourierField& field, double tau = kDefaultTolerance,
                     const std::string& context = {});
/// Test 3: every value of equation(gamma) is at most tau.
TestReport test_shifted(const Equation& equation, std::span<const double> gamma,
                        double tau = kDefaultTolerance, const std::string& context = {});

/// gamma_i = 2 pi frac((sqrt 2 - 1) / 2^i), i = 1..d.
std::vector<double> default_shift(std::size_t d);

struct OrderTestOptions {
  /// First sigma_1 of the scan; 0 picks half the estimated radius divided
  /// by the forward multiplier, doubled while the error at sigma_1 / 2 is
  /// within a factor 100 of round-off.
  double sigma1 = 0.0;
  /// The scan divides sigma_1 by 10^(1/steps_per_decade) each step.
  int decades = 2;
  int steps_per_decade = 8;
  /// Pass band around m + 1.
  double band = 0.5;
  /// Mesh points used (evenly strided subset).
  std::size_t max_points = 256;
};

/// One sigma_1 of the Test-4 scan.
struct OrderSample {
  double sigma1 = 0.0;
  double error1 = 0.0;
  double error2 = 0.0;
  double ratio = 0.0;
  /// error2 too close to round-off for the ratio to mean anything.
  bool cancellation = false;
};

/// Test 4: eps_i = max over sampled theta of |F(W_m) - W_m| at sigma_1 and
/// sigma_1 / 2 (forward map on the unstable branch, inverse map with the
/// parameter multiplied by lambda on the stable one); ratio log2(eps_1 /
/// eps_2) should be close to m + 1. Passes when one scanned sigma_1 without
/// cancellation lands within the band. measured = {ratio, sigma_1, eps_1,
/// eps_2} of the accepted (or closest) sample.
TestReport test_order(const ManifoldExpansion& expansion, const SkewMap& map,
                      const OrderTestOptions& options = {},
                      std::vector<OrderSample>* scan = nullptr);

/// Tests 1-3 for a torus and its Floquet pair: torus Test 1, Floquet
/// Test 1, torus Test 2, Floquet-change Test 2, torus Test 3, Floquet Test 3.
std::vector<TestReport> verify_torus(const TorusSolution& sol, const SkewMap& map,
                                     double tau = kDefaultTolerance,
                                     std::span<const double> gamma = {});

/// Per-order Test 1, Test 2 on every coefficient, Test 3 and Test 4.
std::vector<TestReport> verify_manifold(const ManifoldExpansion& expansion, const SkewMap& map,
                                        double tau = kDefaultTolerance,
                                        std::span<const double> gamma = {},
                                        const OrderTestOptions& order_options = {});

bool all_passed(const std::vector<TestReport>& reports);

}  // namespace qptori

#endif  // QPTORI_VERIFY_HPP
