// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance --criteria 3,4,5,6,7
//   acceptance --criteria 1,2,8 --workers 8

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "../support.hpp"
#include "qptori/cohomology.hpp"
#include "qptori/errors.hpp"
#include "qptori/flowmap.hpp"
#include "qptori/manifold.hpp"
#include "qptori/models.hpp"
#include "qptori/multishoot.hpp"
#include "qptori/parallel.hpp"
#include "qptori/pointwise.hpp"
#include "qptori/profile.hpp"
#include "qptori/torus.hpp"
#include "qptori/verify.hpp"

using namespace qptori;
using qptori::testing::kPi;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// ---------------------------------------------------------------- d = 4 run

struct FullRun {
  TorusSolution sol;
  double wall = 0.0;
  double map_seconds = 0.0;
};

std::shared_ptr<const PoincareMap> full_map() {
  static const auto map = [] {
    PendulumParams p;
    p.alpha = 0.8;
    p.eps = 0.01;
    p.d = 4;
    p.omega = {1.0, std::sqrt(2.0), std::sqrt(3.0), std::sqrt(5.0), std::sqrt(7.0)};
    return std::make_shared<const PoincareMap>(pendulum_field(p));
  }();
  return map;
}

FullRun full_run(std::size_t workers) {
  set_thread_count(workers);
  global_profile().reset();
  const auto start = Clock::now();
  const Mesh mesh({31, 31, 31, 31});
  const double point[2] = {kPi, 0.0};
  FullRun run;
  run.sol = run_newton(*full_map(), constant_seed(*full_map(), mesh, point));
  run.wall = seconds_since(start);
  run.map_seconds = global_profile().seconds(phase::kMapEvaluation);
  return run;
}

const FullRun& full_single() {
  static const FullRun run = full_run(1);
  return run;
}

Verdict criterion1() {
  const auto& sol = full_single().sol;
  const auto ev = floquet_eigenvalues(sol.floquet);
  const double ls = ev.front().real(), lu = ev.back().real();
  const double ref_s = 3.625204837874207e-3, ref_u = 2.758464817115549e2;
  const double es = std::abs(ls - ref_s) / ref_s, eu = std::abs(lu - ref_u) / ref_u;
  const double product = std::abs(ls * lu - 1.0);
  const bool real = ev.front().imag() == 0.0 && ev.back().imag() == 0.0;
  Verdict v;
  v.passed = sol.converged && real && es <= 5e-9 && eu <= 5e-9 && product <= 1e-10;
  char buf[256];
  std::snprintf(buf, sizeof buf, "lambda_s=%.15e (rel %s) lambda_u=%.15e (rel %s) |ls*lu-1|=%s", ls,
                sci(es).c_str(), lu, sci(eu).c_str(), sci(product).c_str());
  v.detail = buf;
  return v;
}

Verdict criterion2() {
  const auto& sol = full_single().sol;
  const auto t1 = test_invariance(torus_equation(sol, *full_map()));
  const double residual = max_of(t1.measured);
  const auto& h = sol.history;
  // Local order of convergence over consecutive pre-floor triples.
  double worst_order = 1e300;
  int checked = 0;
  for (std::size_t k = 0; k + 2 < h.size(); ++k) {
    const double e0 = h[k].torus_residual, e1 = h[k + 1].torus_residual, e2 = h[k + 2].torus_residual;
    if (e2 < 1e-11) break;
    worst_order = std::min(worst_order, std::log(e2 / e1) / std::log(e1 / e0));
    ++checked;
  }
  std::ostringstream os;
  os << "Test-1 residual " << sci(residual) << " after " << sol.iterations << " iterations; history";
  for (const auto& r : h) os << ' ' << sci(r.torus_residual);
  os << "; min local order " << (checked ? sci(worst_order) : std::string("n/a"));
  Verdict v;
  v.passed = residual <= 1e-13 && sol.iterations <= 4 && checked >= 1 && worst_order >= 1.8;
  v.detail = os.str();
  return v;
}

Verdict criterion8(std::size_t workers) {
  const auto& one = full_single();
  const FullRun many = full_run(workers);
  const auto a = one.sol.torus.coefficients();
  const auto b = many.sol.torus.coefficients();
  const double M = static_cast<double>(one.sol.mesh().grid_size());
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]) / M);
  const auto fa = one.sol.floquet, fb = many.sol.floquet;
  diff = std::max(diff, (fa - fb).cwiseAbs().maxCoeff());
  const double speedup = one.wall / many.wall;
  const double fraction = many.map_seconds / many.wall;
  std::ostringstream os;
  os << "coefficient diff " << sci(diff) << "; wall 1 worker " << one.wall << " s, " << workers << " workers "
     << many.wall << " s, speed-up " << speedup << " on " << std::thread::hardware_concurrency()
     << " hardware threads; map evaluation " << 100.0 * fraction << "% of wall time";
  Verdict v;
  v.passed = diff <= 1e-13 && speedup >= 4.0 && fraction >= 0.9;
  v.detail = os.str();
  return v;
}

// ---------------------------------------------------------------- d = 2 run

struct DeskRun {
  TorusSolution sol;
  std::vector<TestReport> torus_tests;
  ManifoldExpansion unstable, stable;
  std::vector<TestReport> unstable_tests, stable_tests;
  double wall = 0.0;
};

const DeskRun& desk_run() {
  static const DeskRun run = [] {
    DeskRun r;
    const auto start = Clock::now();
    const auto& map = qptori::testing::desk_map();
    const Mesh mesh({31, 31});
    const double point[2] = {kPi, 0.0};
    NewtonConfig cfg;
    cfg.tol = 1e-10;
    r.sol = run_newton(map, constant_seed(map, mesh, point), cfg);
    r.torus_tests = verify_torus(r.sol, map, 1e-10);
    ManifoldOptions o;
    o.order = 6;
    r.unstable = compute_manifold(r.sol, map, Branch::kUnstable, o);
    r.stable = compute_manifold(r.sol, map, Branch::kStable, o);
    r.unstable_tests = verify_manifold(r.unstable, map, 1e-10);
    r.stable_tests = verify_manifold(r.stable, map, 1e-10);
    r.wall = seconds_since(start);
    return r;
  }();
  return run;
}

const TestReport& report_with_id(const std::vector<TestReport>& reports, int id) {
  for (const auto& r : reports) {
    if (r.id == id) return r;
  }
  throw std::runtime_error("missing test report");
}

Verdict criterion3() {
  const auto& r = desk_run();
  bool ok = r.sol.converged && all_passed(r.torus_tests);
  std::ostringstream os;
  os << "torus tests";
  for (const auto& t : r.torus_tests) os << ' ' << t.id << (t.passed ? "ok" : "FAIL") << '(' << sci(max_of(t.measured)) << ')';
  for (const auto* e : {&r.unstable, &r.stable}) {
    const auto& tests = e == &r.unstable ? r.unstable_tests : r.stable_tests;
    const auto& t1 = report_with_id(tests, 1);
    const auto& t4 = report_with_id(tests, 4);
    const double ratio = t4.measured.empty() ? 0.0 : t4.measured[0];
    ok = ok && t1.passed && std::abs(ratio - 7.0) <= 0.5;
    os << "; " << branch_name(e->branch) << " max order error " << sci(max_of(t1.measured)) << ", ratio " << ratio;
  }
  os << "; wall " << r.wall << " s";
  ok = ok && r.wall < 300.0;
  return {ok, os.str()};
}

Verdict criterion7() {
  // "Monotone-ish": from order 0 to 6 the error never drops by more than a
  // factor 10 from one order to the next, and every order stays at or below
  // 1e-10.
  const auto& r = desk_run();
  bool ok = true;
  std::ostringstream os;
  for (const auto* e : {&r.unstable, &r.stable}) {
    const auto& err = e->order_errors;
    os << branch_name(e->branch) << ':';
    for (std::size_t k = 0; k < err.size(); ++k) {
      os << ' ' << sci(err[k]);
      ok = ok && err[k] <= 1e-10;
      if (k >= 1) ok = ok && err[k] >= 0.1 * err[k - 1];
    }
    ok = ok && err.size() == 7;
    os << "; ";
  }
  return {ok, os.str()};
}

// ---------------------------------------------------------- random solvers

/// max over the mesh of |scale u(theta + rho) - B u(theta) - g(theta)|.
double shifted_residual(const FourierField& u, const FourierField& g, const Eigen::MatrixXd& B,
                        std::span<const double> rho, double scale) {
  const auto ahead = shift(u, rho).synthesize();
  const auto here = u.synthesize();
  const auto gg = g.synthesize();
  const auto n = B.rows();
  double worst = 0.0;
  for (std::size_t l = 0; l < u.mesh().grid_size(); ++l) {
    const std::size_t o = l * static_cast<std::size_t>(n);
    const Eigen::Map<const Eigen::VectorXd> a(ahead.values().data() + o, n);
    const Eigen::Map<const Eigen::VectorXd> h(here.values().data() + o, n);
    const Eigen::Map<const Eigen::VectorXd> f(gg.values().data() + o, n);
    worst = std::max(worst, (scale * a - B * h - f).norm());
  }
  return worst;
}

double floquet_residual(const FourierMatrix& H, const FourierMatrix& R, const Eigen::MatrixXd& B,
                        std::span<const double> rho) {
  const auto ahead = shift(H, rho).synthesize();
  const auto here = H.synthesize();
  const auto r = R.synthesize();
  const auto mean = average(R.field());
  const Eigen::Map<const Eigen::MatrixXd> Rbar(mean.data(), B.rows(), B.cols());
  double worst = 0.0;
  for (std::size_t l = 0; l < H.mesh().grid_size(); ++l) {
    const Eigen::MatrixXd E = matrix_at(ahead, l) * B - B * matrix_at(here, l) - (matrix_at(r, l) - Rbar);
    worst = std::max(worst, E.norm());
  }
  return worst;
}

struct RandomInstance {
  Mesh mesh;
  std::size_t n = 1;
  Eigen::MatrixXd B;
  std::vector<double> rho;
};

RandomInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> angles(1, 2);
  std::uniform_int_distribution<int> half(1, 15);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  RandomInstance in;
  in.n = static_cast<std::size_t>(dim(rng));
  std::vector<int> sizes(static_cast<std::size_t>(angles(rng)));
  for (auto& N : sizes) N = 2 * half(rng) + 1;
  in.mesh = Mesh(sizes);
  in.B = qptori::testing::random_hyperbolic(in.n, rng);
  in.rho.resize(sizes.size());
  for (auto& r : in.rho) r = angle(rng);
  return in;
}

/// Random right-hand side scaled to unit sup norm on the mesh.
FourierField unit_field(const Mesh& mesh, std::size_t n, std::mt19937_64& rng) {
  const auto g = qptori::testing::random_field(mesh, n, rng);
  const double s = max_norm(g);
  const std::vector<double> zero(n, 0.0);
  return combine(1.0 / s, g, 0.0, FourierField::constant(mesh, zero));
}

Verdict criterion4() {
  std::mt19937_64 rng(20240611);
  const int instances = 100;
  double worst_torus = 0.0, worst_floquet = 0.0, worst_manifold = 0.0;
  for (int i = 0; i < instances; ++i) {
    const auto in = random_instance(rng);
    const auto g = unit_field(in.mesh, in.n, rng);
    const auto u = solve_torus_cohomology(g, in.B, in.rho);
    worst_torus = std::max(worst_torus, shifted_residual(u, g, in.B, in.rho, 1.0));
  }
  for (int i = 0; i < instances; ++i) {
    const auto in = random_instance(rng);
    const FourierMatrix R(in.n, in.n, unit_field(in.mesh, in.n * in.n, rng));
    const auto H = solve_floquet_cohomology(R, in.B, in.rho);
    worst_floquet = std::max(worst_floquet, floquet_residual(H, R, in.B, in.rho));
  }
  std::uniform_int_distribution<int> order(2, 10);
  for (int i = 0; i < instances; ++i) {
    const auto in = random_instance(rng);
    const auto g = unit_field(in.mesh, in.n, rng);
    Eigen::EigenSolver<Eigen::MatrixXd> es(in.B);
    // Alternate between the largest and the smallest eigenvalue.
    double lambda = es.eigenvalues()[0].real();
    for (Eigen::Index j = 1; j < es.eigenvalues().size(); ++j) {
      const double v = es.eigenvalues()[j].real();
      if (i % 2 == 0 ? std::abs(v) > std::abs(lambda) : std::abs(v) < std::abs(lambda)) lambda = v;
    }
    const int m = order(rng);
    const auto u = solve_manifold_cohomology(g, in.B, in.rho, lambda, m);
    worst_manifold = std::max(worst_manifold, shifted_residual(u, g, in.B, in.rho, std::pow(lambda, m)));
  }
  std::ostringstream os;
  os << instances << " instances each; worst residual torus " << sci(worst_torus) << ", Floquet "
     << sci(worst_floquet) << ", manifold " << sci(worst_manifold);
  return {worst_torus <= 1e-12 && worst_floquet <= 1e-12 && worst_manifold <= 1e-12, os.str()};
}

// ------------------------------------------------------------ jet transport

Verdict criterion5() {
  const auto& map = qptori::testing::desk_map();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst_jac = 0.0, worst_b2 = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double x[2] = {angle(rng), unit(rng)};
    const double theta[2] = {angle(rng), angle(rng)};
    double img[2], jac[4];
    map.image_and_jacobian(x, theta, img, jac);
    const double h = 1e-5;
    Eigen::Matrix2d J = Eigen::Map<const Eigen::Matrix2d>(jac), fd;
    for (int j = 0; j < 2; ++j) {
      double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
      xp[j] += h;
      xm[j] -= h;
      const auto p = map.image(xp, theta), q = map.image(xm, theta);
      for (int i = 0; i < 2; ++i) fd(i, j) = (p[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
    worst_jac = std::max(worst_jac, (J - fd).cwiseAbs().maxCoeff() / J.cwiseAbs().maxCoeff());

    // Second-order coefficient of P(x + s v) against a centered second difference.
    Eigen::Vector2d v(unit(rng), unit(rng));
    v.normalize();
    const JetShape shape{1, 2};
    std::vector<double> state{x[0], v[0], 0.0, x[1], v[1], 0.0};
    map.apply(state, shape, theta);
    const Eigen::Vector2d b2(state[2], state[5]);
    // All three stencil values from the same real-arithmetic sweep; near
    // the separatrix the h^2 truncation term needs a step as small as 1e-4.
    const double k = 1e-4;
    const double xp[2] = {x[0] + k * v[0], x[1] + k * v[1]};
    const double xm[2] = {x[0] - k * v[0], x[1] - k * v[1]};
    const auto p = map.image(xp, theta), c = map.image(x, theta), q = map.image(xm, theta);
    Eigen::Vector2d fd2;
    for (int i = 0; i < 2; ++i) {
      const auto s = static_cast<std::size_t>(i);
      fd2[i] = (p[s] - 2.0 * c[s] + q[s]) / (2.0 * k * k);
    }
    worst_b2 = std::max(worst_b2, (b2 - fd2).norm() / b2.norm());
  }
  const PoincareMap unforced(qptori::testing::desk_field(0.0));
  const double fixed[2] = {kPi, 0.0}, theta0[2] = {0.0, 0.0};
  double img[2], jac[4];
  unforced.image_and_jacobian(fixed, theta0, img, jac);
  const auto ev = floquet_eigenvalues(Eigen::Map<const Eigen::Matrix2d>(jac));
  const double expected = std::exp(2.0 * kPi * std::sqrt(0.8));
  const double mult = std::abs(ev.back() - expected) / expected;
  std::ostringstream os;
  os << "Jacobian vs FD " << sci(worst_jac) << "; b2 vs FD " << sci(worst_b2) << "; unforced multiplier "
     << ev.back().real() << " (rel " << sci(mult) << ")";
  return {worst_jac <= 1e-6 && worst_b2 <= 1e-4 && mult <= 1e-8, os.str()};
}

// -------------------------------------------------------- multiple shooting

Verdict criterion6() {
  const auto field = qptori::testing::desk_field();
  const auto lifted = lift_to_blocks(field, 2);
  const Mesh mesh({31, 31});
  const double point[2] = {kPi, 0.0};
  const auto lifted_sol = run_newton(*lifted, lifted_seed(*lifted, mesh, point));
  const auto multi = split_sections(lifted_sol, 2);
  const PoincareMap sectioned(field, {}, 2);
  const auto report = spectral_consistency(multi, desk_run().sol, sectioned, 1e-8, 1e-10, 16);
  std::ostringstream os;
  os << "block eigenvalues";
  for (const auto& mu : report.block_eigenvalues) os << ' ' << mu.real();
  os << "; mu^2 mismatch " << sci(report.spectral_mismatch) << ", coverage " << sci(report.coverage_mismatch)
     << "; composition " << sci(report.composition_error);
  return {report.spectral_mismatch <= 1e-8 && report.coverage_mismatch <= 1e-8 &&
              report.composition_error <= 1e-10,
          os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t workers = 8;
  app.add_option("--criteria", criteria, "criteria to run")->delimiter(',');
  app.add_option("--workers", workers, "worker count for the scaling criterion");
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::function<Verdict()>> table{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, [workers] { return criterion8(workers); }},
  };
  set_thread_count(1);
  int failures = 0;
  for (int c : criteria) {
    const auto it = table.find(c);
    Verdict v;
    const auto start = Clock::now();
    if (it == table.end()) {
      v.detail = "unknown criterion";
    } else {
      try {
        v = it->second();
      } catch (const std::exception& e) {
        v.passed = false;
        v.detail = std::string("exception: ") + e.what();
      }
    }
    if (!v.passed) ++failures;
    std::printf("criterion %d: %s (%.1f s) %s\n", c, v.passed ? "PASS" : "FAIL", seconds_since(start),
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
