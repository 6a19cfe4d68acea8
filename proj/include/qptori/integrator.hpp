#ifndef QPTORI_INTEGRATOR_HPP
#define QPTORI_INTEGRATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qptori/dop853_tableau.hpp"
#include "qptori/errors.hpp"

namespace qptori {

struct IntegratorOptions {
  /// Relative and absolute local error tolerance.
  double tol = 1e-14;
  std::size_t max_steps = 1000000;
  /// Measure the local error on every jet coefficient instead of the point
  /// part only. Needed near equilibria, where the point part barely moves
  /// and would let the step grow until the derivatives are inaccurate.
  bool control_all_coefficients = true;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Adaptive Dormand-Prince 8(5,3) integration of y' = rhs(t, y) from t0 to
/// t1 (t1 < t0 integrates backwards), overwriting y with the final state.
///
/// The state is a flat array; only entries whose index is a multiple of
/// `stride` enter the error norm. With jets stored as consecutive
/// coefficient blocks of length stride, this measures the point part only.
/// rhs has signature void(double t, const double* y, double* dy).
template <class Rhs>
IntegrationStats integrate(Rhs&& rhs, std::span<double> y, std::size_t stride, double t0,
                           double t1, const IntegratorOptions& options = {}) {
  using namespace dop853;
  IntegrationStats stats;
  const std::size_t n = y.size();
  if (n == 0 || t0 == t1) return stats;
  if (!(options.tol > 0.0)) throw DomainError("integrator tolerance must be positive");
  stride = std::max<std::size_t>(1, stride);
  const std::size_t controlled = (n + stride - 1) / stride;
  const double direction = t1 > t0 ? 1.0 : -1.0;
  const double rtol = options.tol;
  const double atol = options.tol;
  constexpr double kSafety = 0.9;
  constexpr double kMinFactor = 0.2;
  constexpr double kMaxFactor = 5.0;
  constexpr double kExponent = -1.0 / 8.0;

  std::vector<double> work((kStages + 3) * n);
  // Compensated (Kahan) accumulation of the state: the low-order bits lost
  // when adding each increment are carried to the next step.
  std::vector<double> carry(n, 0.0);
  std::vector<double> carry_new(n, 0.0);
  auto stage = [&](int s) { return work.data() + static_cast<std::size_t>(s) * n; };
  double* const y_new = stage(kStages + 1);
  double* const y_tmp = stage(kStages + 2);

  auto rms = [&](auto&& value) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; i += stride) {
      const double v = value(i);
      sum += v * v;
    }
    return std::sqrt(sum / static_cast<double>(controlled));
  };

  double t = t0;
  rhs(t, y.data(), stage(0));
  ++stats.evaluations;

  // Initial step from the ratio of state and field sizes.
  double h_abs;
  {
    const double d0 = rms([&](std::size_t i) { return y[i] / (atol + std::abs(y[i]) * rtol); });
    const double d1 = rms([&](std::size_t i) { return stage(0)[i] / (atol + std::abs(y[i]) * rtol); });
    const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    for (std::size_t i = 0; i < n; ++i) y_tmp[i] = y[i] + direction * h0 * stage(0)[i];
    rhs(t + direction * h0, y_tmp, stage(1));
    ++stats.evaluations;
    const double d2 = rms([&](std::size_t i) {
      return (stage(1)[i] - stage(0)[i]) / (atol + std::abs(y[i]) * rtol);
    }) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 8.0);
    h_abs = std::min({100.0 * h0, h1, std::abs(t1 - t0)});
  }

  bool previous_rejected = false;
  while (direction * (t1 - t) > 0.0) {
    if (stats.accepted + stats.rejected >= options.max_steps) {
      throw IntegrationError("integrator exceeded the step limit", t);
    }
    const double min_step = 10.0 * std::numeric_limits<double>::epsilon() *
                            std::max(std::abs(t), std::abs(t1));
    if (h_abs < min_step || !std::isfinite(h_abs)) {
      throw IntegrationError("integrator step size underflow", t);
    }
    double t_new = t + direction * h_abs;
    if (direction * (t_new - t1) > 0.0) t_new = t1;
    const double h = t_new - t;

    for (int s = 1; s < kStages; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += kA[s][j] * stage(j)[i];
        y_tmp[i] = y[i] + h * acc;
      }
      rhs(t + kC[s] * h, y_tmp, stage(s));
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < kStages; ++j) acc += kB[j] * stage(j)[i];
      const double increment = h * acc + carry[i];
      y_new[i] = y[i] + increment;
      carry_new[i] = increment - (y_new[i] - y[i]);
    }
    rhs(t_new, y_new, stage(kStages));
    stats.evaluations += kStages;

    double e5 = 0.0;
    double e3 = 0.0;
    for (std::size_t i = 0; i < n; i += stride) {
      const double scale = atol + std::max(std::abs(y[i]), std::abs(y_new[i])) * rtol;
      double a5 = 0.0;
      double a3 = 0.0;
      for (int j = 0; j <= kStages; ++j) {
        a5 += kE5[j] * stage(j)[i];
        a3 += kE3[j] * stage(j)[i];
      }
      e5 += (a5 / scale) * (a5 / scale);
      e3 += (a3 / scale) * (a3 / scale);
    }
    double error = 0.0;
    if (e5 > 0.0 || e3 > 0.0) {
      error = std::abs(h) * e5 / std::sqrt((e5 + 0.01 * e3) * static_cast<double>(controlled));
    }
    if (!std::isfinite(error)) {
      h_abs *= kMinFactor;
      previous_rejected = true;
      ++stats.rejected;
      continue;
    }

    if (error < 1.0) {
      double factor = error == 0.0 ? kMaxFactor
                                   : std::min(kMaxFactor, kSafety * std::pow(error, kExponent));
      if (previous_rejected) factor = std::min(1.0, factor);
      h_abs = std::abs(h) * factor;
      t = t_new;
      std::copy(y_new, y_new + n, y.begin());
      carry.swap(carry_new);
      std::copy(stage(kStages), stage(kStages) + n, stage(0));
      previous_rejected = false;
      ++stats.accepted;
    } else {
      h_abs = std::abs(h) * std::max(kMinFactor, kSafety * std::pow(error, kExponent));
      previous_rejected = true;
      ++stats.rejected;
    }
  }
  return stats;
}

}  // namespace qptori

#endif  // QPTORI_INTEGRATOR_HPP
