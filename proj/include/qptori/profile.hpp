#ifndef QPTORI_PROFILE_HPP
#define QPTORI_PROFILE_HPP

#include <chrono>
#include <map>
#include <string>

namespace qptori {

/// Accumulated wall time per named phase. Phases are entered from the
/// driving thread only; parallel work happens inside them.
class Profile {
 public:
  void add(const std::string& phase, double seconds) { seconds_[phase] += seconds; }
  void reset() { seconds_.clear(); }
  double seconds(const std::string& phase) const;
  double total() const;
  const std::map<std::string, double>& phases() const { return seconds_; }

 private:
  std::map<std::string, double> seconds_;
};

/// Process-wide profile used by library phases.
Profile& global_profile();

namespace phase {
inline constexpr const char* kMapEvaluation = "map_evaluation";
inline constexpr const char* kFourier = "fourier_transforms";
inline constexpr const char* kCohomology = "cohomological_solves";
inline constexpr const char* kPointwise = "pointwise_algebra";
}  // namespace phase

/// RAII timer adding its lifetime to a phase of the global profile.
class ScopedPhase {
 public:
  explicit ScopedPhase(const char* phase)
      : phase_(phase), start_(std::chrono::steady_clock::now()) {}
  ~ScopedPhase() {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    global_profile().add(phase_, std::chrono::duration<double>(elapsed).count());
  }
  ScopedPhase(const ScopedPhase&) = delete;
  ScopedPhase& operator=(const ScopedPhase&) = delete;

 private:
  const char* phase_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qptori

#endif  // QPTORI_PROFILE_HPP
