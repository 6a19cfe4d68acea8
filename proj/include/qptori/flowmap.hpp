#ifndef QPTORI_FLOWMAP_HPP
#define QPTORI_FLOWMAP_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "qptori/fourier.hpp"
#include "qptori/integrator.hpp"
#include "qptori/jet.hpp"

namespace qptori {

/// x' = F(x, theta_0, ..., theta_d) with theta_i = omega_i t + const.
/// Angles passed to evaluate are in radians and F is 2*pi-periodic in each.
class QPVectorField {
 public:
  virtual ~QPVectorField() = default;

  virtual std::size_t dim() const = 0;
  /// omega_0, ..., omega_d.
  virtual const std::vector<double>& frequencies() const = 0;
  std::size_t angles() const { return frequencies().size() - 1; }

  virtual void evaluate(std::span<const double> x, std::span<const double> phases,
                        std::span<double> out) const = 0;
  virtual void evaluate(std::span<const Jet> x, std::span<const double> phases,
                        std::span<Jet> out) const = 0;
};

/// Implements both evaluate overloads from a member template
///   template <class T> void rhs(std::span<const T>, std::span<const double>, std::span<T>) const;
template <class Derived>
class QPVectorFieldImpl : public QPVectorField {
 public:
  void evaluate(std::span<const double> x, std::span<const double> phases,
                std::span<double> out) const override {
    static_cast<const Derived&>(*this).template rhs<double>(x, phases, out);
  }
  void evaluate(std::span<const Jet> x, std::span<const double> phases,
                std::span<Jet> out) const override {
    static_cast<const Derived&>(*this).template rhs<Jet>(x, phases, out);
  }
};

/// A skew-product map (x, theta) -> (F(x, theta), theta + rotation) acting
/// on jets. States are flat: dim() jets of one shape, each stored as a
/// block of shape.size() consecutive coefficients. Angles are radians.
class SkewMap {
 public:
  virtual ~SkewMap() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t angles() const = 0;
  /// Angle advance per application, radians in [0, 2*pi).
  virtual std::vector<double> rotation() const = 0;

  /// Overwrites a state on the fiber theta with its image on theta + rotation.
  virtual void apply(std::span<double> state, const JetShape& shape,
                     std::span<const double> theta) const = 0;
  /// Overwrites a state on the fiber theta with its preimage on
  /// theta - rotation.
  virtual void apply_inverse(std::span<double> state, const JetShape& shape,
                             std::span<const double> theta) const = 0;

  std::vector<double> image(std::span<const double> x, std::span<const double> theta) const;
  std::vector<double> preimage(std::span<const double> x, std::span<const double> theta) const;
  /// Image plus the column-major Jacobian with respect to x.
  void image_and_jacobian(std::span<const double> x, std::span<const double> theta,
                          std::span<double> image, std::span<double> jacobian) const;
  void preimage_and_jacobian(std::span<const double> x, std::span<const double> theta,
                             std::span<double> preimage, std::span<double> jacobian) const;
};

/// Stroboscopic map over the return time 2*pi/omega_0, optionally split
/// into `sections` equal sub-maps.
///
/// Section map j (1-based) integrates t over [(j-1) delta/r, j delta/r] with
/// theta_i(t) = theta_i + omega_i (t - (j-1) delta/r), so every section
/// advances the angles by section_rotation() = 2 pi omega_i / (r omega_0)
/// mod 2 pi and P_r(...P_1(x, theta)..., theta + (r-1) section_rotation())
/// = P(x, theta). This is rotation()/r only modulo 2 pi / r: the reduced
/// full-period rotation loses the whole turns that the sections still see.
class PoincareMap : public SkewMap {
 public:
  PoincareMap(std::shared_ptr<const QPVectorField> field, IntegratorOptions options = {},
              int sections = 1);

  std::size_t dim() const override { return field_->dim(); }
  std::size_t angles() const override { return field_->angles(); }
  std::vector<double> rotation() const override { return rotation_; }
  /// Angle advance of one section, radians in [0, 2*pi).
  const std::vector<double>& section_rotation() const { return section_rotation_; }

  double return_time() const { return return_time_; }
  int sections() const { return sections_; }
  const QPVectorField& field() const { return *field_; }
  const IntegratorOptions& options() const { return options_; }

  void apply(std::span<double> state, const JetShape& shape,
             std::span<const double> theta) const override;
  void apply_inverse(std::span<double> state, const JetShape& shape,
                     std::span<const double> theta) const override;

  /// Section map j in 1..sections(): state on the fiber theta of section j to
  /// section j+1 (fiber theta + section_rotation()).
  void apply_section(int j, std::span<double> state, const JetShape& shape,
                     std::span<const double> theta) const;
  /// Inverse of section map j: state on the fiber theta of section j+1 back
  /// to section j (fiber theta - section_rotation()).
  void apply_section_inverse(int j, std::span<double> state, const JetShape& shape,
                             std::span<const double> theta) const;

  /// Flows the state from t_start to t_end with theta_i(t) = base_i +
  /// omega_i (t - t_ref) for i >= 1 and theta_0(t) = omega_0 t.
  IntegrationStats flow(std::span<double> state, const JetShape& shape, double t_start,
                        double t_end, std::span<const double> base, double t_ref) const;

 private:
  std::shared_ptr<const QPVectorField> field_;
  IntegratorOptions options_;
  int sections_;
  double return_time_;
  std::vector<double> rotation_;
  std::vector<double> section_rotation_;
};

/// The r section maps stacked into one map of dimension r*n with rotation
/// section_rotation(): block j+1 of the image is P_j(block j) and block 1 is
/// P_r(block r). An invariant torus of this map has block 1 equal to the
/// invariant torus of the full map.
class LiftedMap : public SkewMap {
 public:
  explicit LiftedMap(std::shared_ptr<const PoincareMap> base);

  std::size_t dim() const override { return base_->dim() * static_cast<std::size_t>(base_->sections()); }
  std::size_t angles() const override { return base_->angles(); }
  std::vector<double> rotation() const override;

  void apply(std::span<double> state, const JetShape& shape,
             std::span<const double> theta) const override;
  void apply_inverse(std::span<double> state, const JetShape& shape,
                     std::span<const double> theta) const override;

  const PoincareMap& base() const { return *base_; }
  int sections() const { return base_->sections(); }

 private:
  std::shared_ptr<const PoincareMap> base_;
};

/// Applies the map (or its inverse) at every mesh point theta_l + offset.
/// states holds grid_size() consecutive flat states of map.dim() jets.
void transport_on_mesh(const SkewMap& map, const Mesh& mesh, const JetShape& shape,
                       std::span<double> states, std::span<const double> offset,
                       bool inverse = false);

/// Seeds states for first-order transport: value x_l and identity gradient.
/// values: grid payload of an n-valued field (point-major).
std::vector<double> identity_seed(std::span<const double> values, std::size_t n,
                                  std::size_t points);

}  // namespace qptori

#endif  // QPTORI_FLOWMAP_HPP
