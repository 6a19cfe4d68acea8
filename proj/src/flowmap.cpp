#include "qptori/flowmap.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qptori/errors.hpp"
#include "qptori/parallel.hpp"
#include "qptori/profile.hpp"

namespace qptori {

namespace {

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

void check_state(std::size_t expected, std::span<const double> state) {
  if (state.size() != expected) throw std::invalid_argument("state has wrong size");
}

}  // namespace

// ------------------------------------------------------------ SkewMap

std::vector<double> SkewMap::image(std::span<const double> x, std::span<const double> theta) const {
  std::vector<double> state(x.begin(), x.end());
  apply(state, JetShape{}, theta);
  return state;
}

std::vector<double> SkewMap::preimage(std::span<const double> x,
                                      std::span<const double> theta) const {
  std::vector<double> state(x.begin(), x.end());
  apply_inverse(state, JetShape{}, theta);
  return state;
}

namespace {

void transport_with_jacobian(const SkewMap& map, std::span<const double> x,
                             std::span<const double> theta, std::span<double> value,
                             std::span<double> jacobian, bool inverse) {
  const std::size_t n = map.dim();
  const JetShape shape{static_cast<int>(n), 1};
  auto state = identity_seed(x, n, 1);
  if (inverse) {
    map.apply_inverse(state, shape, theta);
  } else {
    map.apply(state, shape, theta);
  }
  const std::size_t L = shape.size();
  for (std::size_t c = 0; c < n; ++c) {
    value[c] = state[c * L];
    for (std::size_t i = 0; i < n; ++i) jacobian[i * n + c] = state[c * L + 1 + i];
  }
}

}  // namespace

void SkewMap::image_and_jacobian(std::span<const double> x, std::span<const double> theta,
                                 std::span<double> image, std::span<double> jacobian) const {
  transport_with_jacobian(*this, x, theta, image, jacobian, false);
}

void SkewMap::preimage_and_jacobian(std::span<const double> x, std::span<const double> theta,
                                    std::span<double> preimage, std::span<double> jacobian) const {
  transport_with_jacobian(*this, x, theta, preimage, jacobian, true);
}

// -------------------------------------------------------- PoincareMap

PoincareMap::PoincareMap(std::shared_ptr<const QPVectorField> field, IntegratorOptions options,
                         int sections)
    : field_(std::move(field)), options_(options), sections_(sections) {
  if (!field_) throw std::invalid_argument("null vector field");
  const auto& omega = field_->frequencies();
  if (omega.empty() || omega[0] == 0.0) throw DomainError("omega_0 must be nonzero");
  if (sections_ < 1) throw DomainError("number of sections must be at least 1");
  return_time_ = kTwoPi / omega[0];
  rotation_.resize(omega.size() - 1);
  section_rotation_.resize(omega.size() - 1);
  for (std::size_t i = 1; i < omega.size(); ++i) {
    const double turns = omega[i] / omega[0];
    rotation_[i - 1] = kTwoPi * (turns - std::floor(turns));
    const double part = turns / sections_;
    section_rotation_[i - 1] = kTwoPi * (part - std::floor(part));
  }
}

IntegrationStats PoincareMap::flow(std::span<double> state, const JetShape& shape, double t_start,
                                   double t_end, std::span<const double> base,
                                   double t_ref) const {
  require_supported(shape);
  const std::size_t n = dim();
  const std::size_t L = shape.size();
  check_state(n * L, state);
  if (base.size() != angles()) throw std::invalid_argument("angle vector has wrong length");
  const auto& omega = field_->frequencies();
  const std::size_t d = angles();

  std::array<double, kMaxAngles + 1> phases{};
  auto set_phases = [&](double t) {
    phases[0] = omega[0] * t;
    for (std::size_t i = 0; i < d; ++i) phases[i + 1] = base[i] + omega[i + 1] * (t - t_ref);
  };
  const std::span<const double> phase_span(phases.data(), d + 1);

  if (L == 1) {
    auto rhs = [&](double t, const double* y, double* dy) {
      set_phases(t);
      field_->evaluate(std::span<const double>(y, n), phase_span, std::span<double>(dy, n));
    };
    return integrate(rhs, state, 1, t_start, t_end, options_);
  }

  JetVector x(n, Jet(shape));
  JetVector dx(n, Jet(shape));
  auto rhs = [&](double t, const double* y, double* dy) {
    set_phases(t);
    for (std::size_t c = 0; c < n; ++c) {
      auto coeffs = x[c].coefficients();
      std::copy(y + c * L, y + (c + 1) * L, coeffs.begin());
    }
    field_->evaluate(x, phase_span, dx);
    for (std::size_t c = 0; c < n; ++c) {
      if (!(dx[c].shape() == shape)) throw std::logic_error("vector field changed the jet shape");
      const auto coeffs = dx[c].coefficients();
      std::copy(coeffs.begin(), coeffs.end(), dy + c * L);
    }
  };
  return integrate(rhs, state, options_.control_all_coefficients ? 1 : L, t_start, t_end,
                   options_);
}

void PoincareMap::apply(std::span<double> state, const JetShape& shape,
                        std::span<const double> theta) const {
  flow(state, shape, 0.0, return_time_, theta, 0.0);
}

void PoincareMap::apply_inverse(std::span<double> state, const JetShape& shape,
                                std::span<const double> theta) const {
  std::vector<double> base(angles());
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = wrap_angle(theta[i] - rotation_[i]);
  flow(state, shape, return_time_, 0.0, base, 0.0);
}

void PoincareMap::apply_section(int j, std::span<double> state, const JetShape& shape,
                                std::span<const double> theta) const {
  if (j < 1 || j > sections_) throw DomainError("section index out of range");
  const double span = return_time_ / sections_;
  const double t_a = span * (j - 1);
  const double t_b = j == sections_ ? return_time_ : span * j;
  flow(state, shape, t_a, t_b, theta, t_a);
}

void PoincareMap::apply_section_inverse(int j, std::span<double> state, const JetShape& shape,
                                        std::span<const double> theta) const {
  if (j < 1 || j > sections_) throw DomainError("section index out of range");
  const double span = return_time_ / sections_;
  const double t_a = span * (j - 1);
  const double t_b = j == sections_ ? return_time_ : span * j;
  std::vector<double> base(angles());
  for (std::size_t i = 0; i < base.size(); ++i) {
    base[i] = wrap_angle(theta[i] - section_rotation_[i]);
  }
  flow(state, shape, t_b, t_a, base, t_a);
}

// ---------------------------------------------------------- LiftedMap

LiftedMap::LiftedMap(std::shared_ptr<const PoincareMap> base) : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("null base map");
}

std::vector<double> LiftedMap::rotation() const { return base_->section_rotation(); }

void LiftedMap::apply(std::span<double> state, const JetShape& shape,
                      std::span<const double> theta) const {
  const auto r = static_cast<std::size_t>(sections());
  const std::size_t block = base_->dim() * shape.size();
  check_state(block * r, state);
  std::vector<double> out(state.size());
  for (std::size_t j = 0; j < r; ++j) {
    auto src = state.subspan(j * block, block);
    auto dst = std::span<double>(out).subspan(((j + 1) % r) * block, block);
    std::copy(src.begin(), src.end(), dst.begin());
    base_->apply_section(static_cast<int>(j) + 1, dst, shape, theta);
  }
  std::copy(out.begin(), out.end(), state.begin());
}

void LiftedMap::apply_inverse(std::span<double> state, const JetShape& shape,
                              std::span<const double> theta) const {
  const auto r = static_cast<std::size_t>(sections());
  const std::size_t block = base_->dim() * shape.size();
  check_state(block * r, state);
  std::vector<double> out(state.size());
  for (std::size_t j = 0; j < r; ++j) {
    auto src = state.subspan(((j + 1) % r) * block, block);
    auto dst = std::span<double>(out).subspan(j * block, block);
    std::copy(src.begin(), src.end(), dst.begin());
    base_->apply_section_inverse(static_cast<int>(j) + 1, dst, shape, theta);
  }
  std::copy(out.begin(), out.end(), state.begin());
}

// ------------------------------------------------------------ helpers

void transport_on_mesh(const SkewMap& map, const Mesh& mesh, const JetShape& shape,
                       std::span<double> states, std::span<const double> offset, bool inverse) {
  const std::size_t per_point = map.dim() * shape.size();
  if (states.size() != per_point * mesh.grid_size()) {
    throw std::invalid_argument("mesh state array has wrong size");
  }
  if (offset.size() != mesh.dims()) throw std::invalid_argument("offset has wrong length");
  ScopedPhase timer(phase::kMapEvaluation);
  parallel_for(mesh.grid_size(), [&](std::size_t l) {
    std::array<double, kMaxAngles> theta{};
    const std::span<double> th(theta.data(), mesh.dims());
    mesh.grid_point(l, th);
    for (std::size_t i = 0; i < th.size(); ++i) th[i] = wrap_angle(th[i] + offset[i]);
    auto state = states.subspan(l * per_point, per_point);
    if (inverse) {
      map.apply_inverse(state, shape, th);
    } else {
      map.apply(state, shape, th);
    }
    for (double v : state) {
      if (!std::isfinite(v)) throw IntegrationError("non-finite map value on the mesh", 0.0);
    }
  });
}

std::vector<double> identity_seed(std::span<const double> values, std::size_t n,
                                  std::size_t points) {
  const std::size_t L = n + 1;
  std::vector<double> states(points * n * L, 0.0);
  for (std::size_t l = 0; l < points; ++l) {
    for (std::size_t c = 0; c < n; ++c) {
      double* jet = states.data() + (l * n + c) * L;
      jet[0] = values[l * n + c];
      jet[1 + c] = 1.0;
    }
  }
  return states;
}

}  // namespace qptori
