#include "qptori/torus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qptori/errors.hpp"
#include "qptori/pointwise.hpp"
#include "qptori/profile.hpp"

namespace qptori {

namespace {

std::vector<double> zero_offset(const Mesh& mesh) { return std::vector<double>(mesh.dims(), 0.0); }

/// Grid values of x(theta + rho).
FourierField shifted_grid(const FourierField& x, std::span<const double> rho) {
  return shift(x, rho).synthesize();
}

FourierMatrix shifted_grid(const FourierMatrix& x, std::span<const double> rho) {
  return shift(x, rho).synthesize();
}

}  // namespace

MapSample sample_map(const SkewMap& map, const FourierField& torus) {
  return sample_map(map, torus, zero_offset(torus.mesh()));
}

MapSample sample_map(const SkewMap& map, const FourierField& torus,
                     std::span<const double> offset) {
  const FourierField grid = torus.synthesize();
  const Mesh& mesh = grid.mesh();
  const std::size_t n = grid.dim();
  if (n != map.dim()) throw std::invalid_argument("torus dimension does not match the map");
  if (mesh.dims() != map.angles()) throw std::invalid_argument("mesh does not match the map angles");
  const std::size_t M = mesh.grid_size();
  const std::size_t L = n + 1;
  auto states = identity_seed(grid.values(), n, M);
  transport_on_mesh(map, mesh, JetShape{static_cast<int>(n), 1}, states, offset);
  std::vector<double> image(M * n);
  std::vector<double> jacobian(M * n * n);
  for (std::size_t l = 0; l < M; ++l) {
    for (std::size_t c = 0; c < n; ++c) {
      const double* jet = states.data() + (l * n + c) * L;
      image[l * n + c] = jet[0];
      for (std::size_t i = 0; i < n; ++i) jacobian[l * n * n + i * n + c] = jet[1 + i];
    }
  }
  return {FourierField::from_values(mesh, n, std::move(image)),
          FourierMatrix(n, n, FourierField::from_values(mesh, n * n, std::move(jacobian)))};
}

FourierField invariance_error(const FourierField& torus, const FourierField& image,
                              std::span<const double> rho) {
  return combine(1.0, shifted_grid(torus, rho), -1.0, image);
}

FourierMatrix reducibility_error(const TorusSolution& sol, const FourierMatrix& jacobian) {
  const FourierMatrix cinv_shift = shifted_grid(sol.change_inverse, sol.rotation);
  const FourierMatrix product = multiply(multiply(cinv_shift, jacobian), sol.change);
  return subtract_constant(product, sol.floquet);
}

FourierField torus_correction(const TorusSolution& current, const MapSample& sample,
                              CohomologyReport* report, FourierField* correction,
                              const CohomologyOptions& options) {
  const FourierField y = invariance_error(current.torus, sample.image, current.rotation);
  const FourierMatrix cinv_shift = shifted_grid(current.change_inverse, current.rotation);
  const FourierField g = combine(-1.0, multiply(cinv_shift, y), 0.0, y);
  const FourierField u = solve_torus_cohomology(g, current.floquet, current.rotation, report, options);
  const FourierField h = multiply(current.change, u).analyze();
  if (correction) *correction = h;
  return combine(1.0, current.torus, 1.0, h).analyze();
}

FourierField torus_correction(const TorusSolution& current, const SkewMap& map,
                              CohomologyReport* report) {
  return torus_correction(current, sample_map(map, current.torus), report);
}

void floquet_correction(TorusSolution& current, const FourierMatrix& jacobian,
                        CohomologyReport* report, FourierMatrix* correction,
                        const CohomologyOptions& options) {
  const FourierMatrix R = reducibility_error(current, jacobian).analyze();
  const std::size_t n = current.dim();
  const auto mean = average(R.field());
  const Eigen::MatrixXd avg =
      Eigen::Map<const Eigen::MatrixXd>(mean.data(), static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(n));
  const FourierMatrix H = solve_floquet_cohomology(R, current.floquet, current.rotation, report, options);
  if (correction) *correction = H;
  const FourierMatrix identity_plus_h =
      combine(1.0, FourierMatrix::identity(current.mesh(), n, Representation::kGrid), 1.0, H);
  const FourierMatrix change = multiply(current.change, identity_plus_h);
  current.change_inverse = invert(change).analyze();
  current.change = change.analyze();
  current.floquet += avg;
}

void floquet_correction(TorusSolution& current, const SkewMap& map, CohomologyReport* report) {
  floquet_correction(current, sample_map(map, current.torus).jacobian, report);
}

std::vector<ResonanceFlag> resonance_monitor(const FourierField& correction, double threshold) {
  const FourierField c = correction.analyze();
  const Mesh& mesh = c.mesh();
  const std::size_t dim = c.dim();
  const auto coeffs = c.coefficients();
  std::vector<double> size(mesh.coeff_size(), 0.0);
  std::vector<int> order(mesh.coeff_size(), 0);
  double largest = 0.0;
  std::vector<int> kappa(mesh.dims());
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    mesh.packed_index_to_tuple(l, kappa);
    for (int k : kappa) order[l] += std::abs(k);
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const auto amp = real_amplitude(coeffs[l * dim + i], mesh.grid_size());
      s += amp.cos_amp * amp.cos_amp + amp.sin_amp * amp.sin_amp;
    }
    size[l] = std::sqrt(s);
    if (order[l] > 0) largest = std::max(largest, size[l]);
  }
  std::map<int, std::vector<double>> groups;
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    if (order[l] > 0) groups[order[l]].push_back(size[l]);
  }
  std::map<int, double> median;
  for (auto& [k, sizes] : groups) {
    auto mid = sizes.begin() + static_cast<std::ptrdiff_t>(sizes.size() / 2);
    std::nth_element(sizes.begin(), mid, sizes.end());
    median[k] = *mid;
  }
  std::vector<ResonanceFlag> flags;
  const double floor = largest / threshold;
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    if (order[l] == 0 || size[l] <= floor) continue;
    const double med = median[order[l]];
    if (size[l] > threshold * med) {
      flags.push_back({mesh.packed_index_to_tuple(l), size[l], med});
    }
  }
  return flags;
}

TorusSolution make_solution(const TorusSeed& seed, std::span<const double> rotation) {
  TorusSolution sol;
  sol.torus = seed.torus.analyze();
  sol.change = seed.change.analyze();
  sol.change_inverse = invert(seed.change).analyze();
  sol.floquet = seed.floquet;
  sol.rotation.assign(rotation.begin(), rotation.end());
  const std::size_t n = sol.torus.dim();
  if (sol.change.rows() != n || sol.change.cols() != n ||
      static_cast<std::size_t>(sol.floquet.rows()) != n ||
      static_cast<std::size_t>(sol.floquet.cols()) != n) {
    throw std::invalid_argument("seed sizes are inconsistent");
  }
  if (!(sol.change.mesh() == sol.torus.mesh())) throw std::invalid_argument("seed meshes differ");
  return sol;
}

TorusSolution run_newton(const SkewMap& map, const TorusSeed& seed, const NewtonConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw DomainError("Newton threshold must be positive");
  TorusSolution sol = make_solution(seed, map.rotation());
  // One sweep per iteration: the sample at the corrected torus feeds the
  // Floquet step and, afterwards, the residuals of the next record.
  MapSample sample = sample_map(map, sol.torus);
  double previous = 0.0;
  int growth = 0;
  for (int k = 0;; ++k) {
    IterationRecord record;
    record.torus_residual = max_norm(invariance_error(sol.torus, sample.image, sol.rotation));
    record.floquet_residual = max_norm(reducibility_error(sol, sample.jacobian));
    sol.history.push_back(record);
    const double err = std::max(record.torus_residual, record.floquet_residual);
    if (!std::isfinite(err)) throw ConvergenceError("non-finite Newton residual");
    if (record.torus_residual <= cfg.tol && record.floquet_residual <= cfg.tol) {
      sol.converged = true;
      sol.stop_reason = "converged";
      return sol;
    }
    if (k >= cfg.max_iter) {
      std::ostringstream os;
      os << "Newton did not converge in " << cfg.max_iter << " iterations (residual " << err << ")";
      throw ConvergenceError(os.str());
    }
    if (k > 0) {
      growth = err > previous ? growth + 1 : 0;
      if (growth >= 2) {
        std::ostringstream os;
        os << "Newton diverges: residual grew for two consecutive iterations (" << err << ")";
        throw ConvergenceError(os.str());
      }
      if (cfg.stop_on_stagnation && growth == 0 && err > 0.9 * previous) {
        sol.converged = false;
        sol.stop_reason = "stagnation";
        return sol;
      }
    }
    previous = err;

    FourierField h;
    sol.torus = torus_correction(sol, sample, &sol.cohomology, &h, cfg.cohomology);
    sample = sample_map(map, sol.torus);
    FourierMatrix H;
    floquet_correction(sol, sample.jacobian, &sol.cohomology, &H, cfg.cohomology);
    ++sol.iterations;

    auto flags = resonance_monitor(h, cfg.resonance_threshold);
    auto hflags = resonance_monitor(H.field(), cfg.resonance_threshold);
    sol.resonance_flags.insert(sol.resonance_flags.end(), flags.begin(), flags.end());
    sol.resonance_flags.insert(sol.resonance_flags.end(), hflags.begin(), hflags.end());
  }
}

TorusSeed constant_seed(const SkewMap& map, const Mesh& mesh, std::span<const double> point) {
  const std::size_t n = map.dim();
  if (point.size() != n) throw std::invalid_argument("seed point has wrong dimension");
  std::vector<double> image(n);
  std::vector<double> jac(n * n);
  map.image_and_jacobian(point, zero_offset(mesh), image, jac);
  TorusSeed seed;
  seed.torus = FourierField::constant(mesh, point);
  seed.change = FourierMatrix::identity(mesh, n);
  seed.floquet = Eigen::Map<const Eigen::MatrixXd>(jac.data(), static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
  return seed;
}

TorusSeed seed_from(const TorusSolution& sol) { return {sol.torus, sol.change, sol.floquet}; }

TorusSolution continue_torus(const MapFactory& factory, std::span<const double> parameters,
                             TorusSeed seed, const NewtonConfig& cfg) {
  if (parameters.empty()) throw DomainError("continuation needs at least one parameter value");
  TorusSolution sol;
  for (double p : parameters) {
    const auto map = factory(p);
    sol = run_newton(*map, seed, cfg);
    if (!sol.converged) {
      std::ostringstream os;
      os << "continuation stalled at parameter " << p << " (" << sol.stop_reason << ")";
      throw ConvergenceError(os.str());
    }
    seed = seed_from(sol);
  }
  return sol;
}

std::vector<std::complex<double>> floquet_eigenvalues(const Eigen::MatrixXd& B) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(B, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a) < std::abs(b); });
  return ev;
}

}  // namespace qptori
