#ifndef QPTORI_MODELS_HPP
#define QPTORI_MODELS_HPP

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qptori/flowmap.hpp"

namespace qptori {

/// x' = y, y' = -alpha sin x + eps / (d + 2 + sum_{i=0}^{d} cos theta_i).
struct PendulumParams {
  double alpha = 0.8;
  double eps = 0.01;
  int d = 4;
  /// omega_0..omega_d; empty selects the defaults 1, sqrt 2, sqrt 3, sqrt 5, sqrt 7.
  std::vector<double> omega;
};

class PendulumField : public QPVectorFieldImpl<PendulumField> {
 public:
  explicit PendulumField(PendulumParams params);

  std::size_t dim() const override { return 2; }
  const std::vector<double>& frequencies() const override { return params_.omega; }
  const PendulumParams& params() const { return params_; }

  /// Forcing profile at the phases theta_0..theta_d (radians).
  double forcing(std::span<const double> phases) const;

  template <class T>
  void rhs(std::span<const T> x, std::span<const double> phases, std::span<T> out) const {
    using std::sin;
    out[0] = x[1];
    out[1] = -params_.alpha * sin(x[0]) + params_.eps * forcing(phases);
  }

 private:
  PendulumParams params_;
};

/// Default frequency vector of length d+1.
std::vector<double> default_pendulum_frequencies(int d);

std::shared_ptr<const QPVectorField> pendulum_field(PendulumParams params);

/// Key-value parameters handed to a model factory.
using ModelParams = std::map<std::string, std::string>;
using ModelFactory = std::function<std::shared_ptr<const QPVectorField>(const ModelParams&)>;

/// Named vector-field factories. "pendulum" is always registered; other
/// models (for instance ones driven by external coefficient tables) can be
/// added at startup.
class ModelRegistry {
 public:
  static ModelRegistry& instance();

  void add(const std::string& name, ModelFactory factory);
  bool contains(const std::string& name) const;
  /// Throws DomainError for an unknown name.
  std::shared_ptr<const QPVectorField> create(const std::string& name,
                                              const ModelParams& params) const;
  std::vector<std::string> names() const;

 private:
  ModelRegistry();
  std::map<std::string, ModelFactory> factories_;
};

/// Pendulum parameters from "alpha", "eps", "d", "omega" (comma-separated).
PendulumParams pendulum_params(const ModelParams& params);

}  // namespace qptori

#endif  // QPTORI_MODELS_HPP
