#include "qptori/models.hpp"

#include <sstream>

#include "qptori/errors.hpp"

namespace qptori {

std::vector<double> default_pendulum_frequencies(int d) {
  static const double kRoots[] = {1.0, std::sqrt(2.0), std::sqrt(3.0), std::sqrt(5.0), std::sqrt(7.0)};
  if (d < 1 || d > 4) throw DomainError("default pendulum frequencies exist for d in 1..4");
  return {kRoots, kRoots + d + 1};
}

PendulumField::PendulumField(PendulumParams params) : params_(std::move(params)) {
  if (params_.omega.empty()) params_.omega = default_pendulum_frequencies(params_.d);
  if (params_.d < 1 || static_cast<std::size_t>(params_.d) > kMaxAngles) {
    throw DomainError("pendulum needs 1 to " + std::to_string(kMaxAngles) + " perturbing angles");
  }
  if (params_.omega.size() != static_cast<std::size_t>(params_.d) + 1) {
    throw DomainError("pendulum needs d+1 frequencies");
  }
  if (params_.omega[0] == 0.0) throw DomainError("omega_0 must be nonzero");
  if (!std::isfinite(params_.alpha) || !std::isfinite(params_.eps)) {
    throw DomainError("pendulum parameters must be finite");
  }
}

double PendulumField::forcing(std::span<const double> phases) const {
  double denom = params_.d + 2.0;
  for (double p : phases) denom += std::cos(p);
  return 1.0 / denom;
}

std::shared_ptr<const QPVectorField> pendulum_field(PendulumParams params) {
  return std::make_shared<PendulumField>(std::move(params));
}

namespace {

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || text.find_first_not_of(" \t", used) != std::string::npos) {
    throw FormatError("bad number for " + key + ": '" + text + "'");
  }
  return v;
}

}  // namespace

PendulumParams pendulum_params(const ModelParams& params) {
  PendulumParams p;
  for (const auto& [key, value] : params) {
    if (key == "alpha") {
      p.alpha = parse_double(key, value);
    } else if (key == "eps") {
      p.eps = parse_double(key, value);
    } else if (key == "d") {
      p.d = static_cast<int>(parse_double(key, value));
    } else if (key == "omega") {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) p.omega.push_back(parse_double(key, item));
    } else {
      throw FormatError("unknown pendulum parameter '" + key + "'");
    }
  }
  return p;
}

ModelRegistry::ModelRegistry() {
  add("pendulum", [](const ModelParams& params) { return pendulum_field(pendulum_params(params)); });
}

ModelRegistry& ModelRegistry::instance() {
  static ModelRegistry registry;
  return registry;
}

void ModelRegistry::add(const std::string& name, ModelFactory factory) {
  factories_[name] = std::move(factory);
}

bool ModelRegistry::contains(const std::string& name) const { return factories_.count(name) != 0; }

std::shared_ptr<const QPVectorField> ModelRegistry::create(const std::string& name,
                                                           const ModelParams& params) const {
  const auto it = factories_.find(name);
  if (it == factories_.end()) throw DomainError("unknown model '" + name + "'");
  return it->second(params);
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, f] : factories_) out.push_back(name);
  return out;
}

}  // namespace qptori
