#ifndef QPTORI_CONFIG_HPP
#define QPTORI_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "qptori/manifold.hpp"
#include "qptori/models.hpp"

namespace qptori {

/// Settings of one batch run. Text form, one `key = value` per line, `#`
/// starts a comment, `[section]` lines prefix the following keys with
/// `section.`:
///
///   model = pendulum            model id in the registry
///   model.<name> = value        model parameter (pendulum: alpha, eps, d,
///                               omega as a comma list)
///   mesh = 31                   N per angle: one value for all angles or a
///                               comma list, odd
///   newton.tol = 1e-10
///   newton.max_iter = 20
///   integrator.tol = 1e-14
///   manifold.order = 6
///   manifold.branches = stable,unstable
///   manifold.scaling = 1        a positive number or "auto"
///   sections = 1                shooting sections r, or "auto"
///   threads = 0                 0 lets the CLI flag or environment decide
///   output = out                output directory
///   seed = builtin              "builtin" or a torus artifact to start from
///   seed.point = 3.14159,0      builtin seed point; default (pi, 0)
///   verify.tol = 1e-10
struct RunConfig {
  std::string model = "pendulum";
  ModelParams model_params;
  std::vector<int> mesh{31};
  double newton_tol = 1e-10;
  int newton_max_iter = 20;
  double integrator_tol = 1e-14;
  int manifold_order = 6;
  std::vector<Branch> branches{Branch::kUnstable, Branch::kStable};
  double manifold_scaling = 1.0;
  bool auto_scaling = false;
  /// 0 means "auto".
  int sections = 1;
  int threads = 0;
  std::string output = "out";
  std::string seed = "builtin";
  std::vector<double> seed_point;
  double verify_tol = 1e-10;

  /// Mesh sizes for d angles: a single entry is repeated.
  std::vector<int> mesh_for(std::size_t d) const;
};

/// Parses the text form. Unknown keys, malformed values, non-positive
/// tolerances and even mesh sizes throw FormatError naming the line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Text form that parses back to an equal configuration.
std::string format_config(const RunConfig& config);

/// Comma-separated numbers; throws FormatError.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace qptori

#endif  // QPTORI_CONFIG_HPP
