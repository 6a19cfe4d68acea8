#include "qptori/profile.hpp"

namespace qptori {

double Profile::seconds(const std::string& phase) const {
  const auto it = seconds_.find(phase);
  return it == seconds_.end() ? 0.0 : it->second;
}

double Profile::total() const {
  double sum = 0.0;
  for (const auto& [name, s] : seconds_) sum += s;
  return sum;
}

Profile& global_profile() {
  static Profile profile;
  return profile;
}

}  // namespace qptori
