// Batch driver: torus, manifold, verify and slice subcommands.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qptori/config.hpp"
#include "qptori/errors.hpp"
#include "qptori/io.hpp"
#include "qptori/manifold.hpp"
#include "qptori/models.hpp"
#include "qptori/multishoot.hpp"
#include "qptori/parallel.hpp"
#include "qptori/pointwise.hpp"
#include "qptori/profile.hpp"
#include "qptori/torus.hpp"
#include "qptori/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qptori;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kNoConvergence = 2,
  kResonance = 3,
  kSpectrum = 4,
  kIo = 5,
  kTestsFailed = 6,
  kIntegration = 7,
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Human log: stdout plus a file in the output directory.
class Log {
 public:
  void open(const fs::path& path) { file_.open(path); }
  template <class T>
  Log& operator<<(const T& v) {
    std::cout << v;
    if (file_) file_ << v;
    return *this;
  }

 private:
  std::ofstream file_;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  std::size_t threads = 1;
  std::string resume;
  Log log;
  Clock::time_point start = Clock::now();
};

std::size_t resolve_threads(int flag, int from_config) {
  if (flag > 0) return static_cast<std::size_t>(flag);
  if (const char* env = std::getenv("QPTORI_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  if (from_config > 0) return static_cast<std::size_t>(from_config);
  return std::max(1u, std::thread::hardware_concurrency());
}

std::shared_ptr<const QPVectorField> make_field(const RunConfig& cfg) {
  return ModelRegistry::instance().create(cfg.model, cfg.model_params);
}

IntegratorOptions integrator_options(const RunConfig& cfg) {
  IntegratorOptions o;
  o.tol = cfg.integrator_tol;
  return o;
}

NewtonConfig newton_config(const RunConfig& cfg) {
  NewtonConfig n;
  n.tol = cfg.newton_tol;
  n.max_iter = cfg.newton_max_iter;
  return n;
}

std::vector<double> seed_point(const RunConfig& cfg, std::size_t n) {
  if (!cfg.seed_point.empty()) {
    if (cfg.seed_point.size() != n) throw FormatError("seed.point has the wrong dimension");
    return cfg.seed_point;
  }
  if (cfg.model == "pendulum") return {std::numbers::pi, 0.0};
  throw FormatError("seed.point is required for model '" + cfg.model + "'");
}

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json eigen_json(const std::vector<std::complex<double>>& ev) {
  json out = json::array();
  for (const auto& z : ev) out.push_back({{"re", z.real()}, {"im", z.imag()}, {"abs", std::abs(z)}});
  return out;
}

json tests_json(const std::vector<TestReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    out.push_back({{"id", r.id},
                   {"name", r.name},
                   {"measured", r.measured},
                   {"tolerance", r.tolerance},
                   {"passed", r.passed},
                   {"context", r.context}});
  }
  return out;
}

json profile_json(double wall) {
  json phases = json::object();
  for (const auto& [name, s] : global_profile().phases()) {
    phases[name] = {{"seconds", s}, {"percent", wall > 0.0 ? 100.0 * s / wall : 0.0}};
  }
  return phases;
}

void log_tests(Log& log, const std::vector<TestReport>& reports) {
  for (const auto& r : reports) {
    std::ostringstream os;
    os.precision(3);
    os << "  Test " << r.id << " " << r.name << " [" << r.context << "] " << (r.passed ? "pass" : "FAIL")
       << " (";
    for (std::size_t i = 0; i < r.measured.size(); ++i) os << (i ? " " : "") << std::scientific << r.measured[i];
    os << ", tol " << r.tolerance << ")\n";
    log << os.str();
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

json base_report(const Context& ctx, const std::string& command) {
  return {{"command", command}, {"config", format_config(ctx.cfg)}, {"threads", ctx.threads}};
}

void finish_report(json& report, const Context& ctx, const fs::path& path) {
  const double wall = seconds_since(ctx.start);
  report["wall_time_seconds"] = wall;
  report["profile"] = profile_json(wall);
  write_json(path, report);
}

/// Torus artifact in the output directory, or the resume file.
fs::path torus_artifact(const Context& ctx) {
  if (!ctx.resume.empty()) return ctx.resume;
  if (fs::exists(ctx.out / "multi_torus.qpt")) return ctx.out / "multi_torus.qpt";
  return ctx.out / "torus.qpt";
}

/// Poincare map matching an artifact of dimension `dim`: r = dim / n.
std::shared_ptr<const SkewMap> map_for(const RunConfig& cfg, std::size_t dim) {
  auto field = make_field(cfg);
  const std::size_t n = field->dim();
  if (dim % n != 0) throw FormatError("artifact dimension does not fit the configured model");
  const int r = static_cast<int>(dim / n);
  if (r == 1) return std::make_shared<PoincareMap>(field, integrator_options(cfg), 1);
  return lift_to_blocks(field, r, integrator_options(cfg));
}

void check_seed_mesh(const FourierField& torus, const Mesh& mesh) {
  if (!(torus.mesh() == mesh)) throw FormatError("resume artifact mesh differs from the configured mesh");
}

int cmd_torus(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  auto field = make_field(cfg);
  const std::size_t n = field->dim();
  const Mesh mesh(cfg.mesh_for(field->angles()));
  const IntegratorOptions iopt = integrator_options(cfg);
  auto base = std::make_shared<PoincareMap>(field, iopt, 1);

  std::string resume = ctx.resume;
  if (resume.empty() && cfg.seed != "builtin") resume = cfg.seed;

  int r = cfg.sections;
  if (r == 0) {
    const std::vector<double> point = seed_point(cfg, n);
    const TorusSeed probe = constant_seed(*base, mesh, point);
    r = suggest_sections(probe.floquet);
    ctx.log << "sections: auto -> " << r << "\n";
  }

  TorusSeed seed;
  std::shared_ptr<const SkewMap> map;
  if (r == 1) {
    map = base;
    if (!resume.empty()) {
      seed = seed_from(load_torus(resume));
    } else {
      seed = constant_seed(*base, mesh, seed_point(cfg, n));
    }
  } else {
    auto lifted = lift_to_blocks(field, r, iopt);
    map = lifted;
    if (!resume.empty()) {
      seed = seed_from(load_multi_torus(resume).lifted);
    } else {
      seed = lifted_seed(*lifted, mesh, seed_point(cfg, n));
    }
  }
  check_seed_mesh(seed.torus, mesh);
  if (seed.torus.dim() != map->dim()) throw FormatError("resume artifact has a different section count");

  ctx.log << "torus: model " << cfg.model << ", d=" << mesh.dims() << ", M=" << mesh.grid_size()
          << ", sections " << r << ", threads " << ctx.threads << "\n";
  const TorusSolution sol = run_newton(*map, seed, newton_config(cfg));
  for (std::size_t k = 0; k < sol.history.size(); ++k) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << "  iteration " << k << ": torus " << sol.history[k].torus_residual << ", floquet "
       << sol.history[k].floquet_residual << "\n";
    ctx.log << os.str();
  }

  json report = base_report(ctx, "torus");
  report["sections"] = r;
  report["converged"] = sol.converged;
  report["stop_reason"] = sol.stop_reason;
  report["iterations"] = sol.iterations;
  json history = json::array();
  for (const auto& h : sol.history) history.push_back({{"torus", h.torus_residual}, {"floquet", h.floquet_residual}});
  report["history"] = history;
  report["floquet_matrix"] = matrix_json(sol.floquet);
  report["eigenvalues"] = eigen_json(floquet_eigenvalues(sol.floquet));
  json flags = json::array();
  for (const auto& f : sol.resonance_flags) flags.push_back({{"kappa", f.kappa}, {"size", f.size}, {"median", f.median}});
  report["resonance_flags"] = flags;

  if (!sol.converged) {
    finish_report(report, ctx, ctx.out / "torus_report.json");
    std::cerr << "torus: no convergence (" << sol.stop_reason << ")\n";
    return sol.resonance_flags.empty() ? kNoConvergence : kResonance;
  }

  const auto tests = verify_torus(sol, *map, cfg.verify_tol);
  log_tests(ctx.log, tests);
  report["tests"] = tests_json(tests);

  if (r == 1) {
    save_torus(ctx.out / "torus.qpt", sol);
  } else {
    const MultiTorus multi = split_sections(sol, r);
    save_multi_torus(ctx.out / "multi_torus.qpt", multi);
    json blocks = json::array();
    for (const auto& B : multi.matrices) blocks.push_back(matrix_json(B));
    report["section_matrices"] = blocks;
  }
  {
    std::ofstream csv(ctx.out / "torus_coefficients.csv");
    write_coefficient_csv(csv, sol.torus);
  }
  for (const auto& z : floquet_eigenvalues(sol.floquet)) {
    std::ostringstream os;
    os.precision(16);
    os << "  eigenvalue " << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i\n";
    ctx.log << os.str();
  }
  finish_report(report, ctx, ctx.out / "torus_report.json");
  ctx.log << "torus: wall time " << seconds_since(ctx.start) << " s\n";
  return all_passed(tests) ? kOk : kTestsFailed;
}

json manifold_json(const ManifoldExpansion& e) {
  json j;
  j["branch"] = branch_name(e.branch);
  j["eigenvalue"] = e.eigenvalue;
  j["eigenvector"] = std::vector<double>(e.eigenvector.data(), e.eigenvector.data() + e.eigenvector.size());
  j["scaling"] = e.scaling;
  j["rescaled"] = e.rescaled;
  j["order_residuals"] = e.order_residuals;
  j["order_errors"] = e.order_errors;
  j["transport_tails"] = e.transport_tails;
  j["warnings"] = e.warnings;
  j["radius_estimate"] = estimate_radius(e);
  std::vector<double> norms;
  for (int k = 0; k <= e.order(); ++k) norms.push_back(max_norm(e.coefficient(k)));
  j["coefficient_norms"] = norms;
  return j;
}

int cmd_manifold(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const fs::path source = torus_artifact(ctx);
  const ArtifactKind kind = artifact_kind(source);
  if (kind != ArtifactKind::kTorus && kind != ArtifactKind::kMultiTorus) {
    throw FormatError(source.string() + " is not a torus artifact");
  }
  ManifoldOptions opt;
  opt.order = cfg.manifold_order;
  opt.scaling = cfg.manifold_scaling;
  opt.auto_scaling = cfg.auto_scaling;

  json report = base_report(ctx, "manifold");
  report["torus_artifact"] = source.string();
  json branches = json::array();
  bool passed = true;

  MultiTorus multi;
  TorusSolution single;
  if (kind == ArtifactKind::kMultiTorus) {
    multi = load_multi_torus(source);
  } else {
    single = load_torus(source);
  }
  const TorusSolution& sol = kind == ArtifactKind::kMultiTorus ? multi.lifted : single;
  const auto map = map_for(cfg, sol.dim());

  for (Branch br : cfg.branches) {
    const std::string name = branch_name(br);
    ctx.log << "manifold: " << name << " branch to order " << opt.order << "\n";
    ManifoldExpansion exp;
    std::vector<ManifoldExpansion> sections;
    if (kind == ArtifactKind::kMultiTorus) {
      sections = manifold_multishoot(multi, *map, br, opt, &exp);
    } else {
      exp = compute_manifold(sol, *map, br, opt);
    }
    const auto tests = verify_manifold(exp, *map, cfg.verify_tol);
    log_tests(ctx.log, tests);
    passed = passed && all_passed(tests);

    save_manifold(ctx.out / ("manifold_" + name + ".qpt"), exp);
    for (std::size_t j = 0; j < sections.size(); ++j) {
      save_manifold(ctx.out / ("manifold_" + name + "_section" + std::to_string(j + 1) + ".qpt"), sections[j]);
    }
    const ManifoldExpansion& shown = sections.empty() ? exp : sections.front();
    double radius = estimate_radius(shown);
    if (!std::isfinite(radius) || !(radius > 0.0)) radius = 1.0;
    const double reach = std::min(1.0, 0.5 * radius);
    std::vector<double> sigmas;
    for (int k = -4; k <= 4; ++k) sigmas.push_back(reach * k / 4.0);
    std::vector<double> fixed(shown.mesh().dims(), 0.0);
    {
      std::ofstream csv(ctx.out / ("manifold_" + name + "_slice.csv"));
      write_manifold_slice(csv, shown, 0, fixed, sigmas);
    }

    json b = manifold_json(exp);
    b["tests"] = tests_json(tests);
    if (!sections.empty()) {
      json secs = json::array();
      for (const auto& s : sections) {
        secs.push_back({{"eigenvector", std::vector<double>(s.eigenvector.data(),
                                                             s.eigenvector.data() + s.eigenvector.size())}});
      }
      b["sections"] = secs;
    }
    branches.push_back(b);
  }
  report["branches"] = branches;
  finish_report(report, ctx, ctx.out / "manifold_report.json");
  ctx.log << "manifold: wall time " << seconds_since(ctx.start) << " s\n";
  return passed ? kOk : kTestsFailed;
}

int cmd_verify(Context& ctx, const std::vector<std::string>& artifacts) {
  const RunConfig& cfg = ctx.cfg;
  std::vector<std::string> paths = artifacts;
  if (paths.empty()) paths.push_back(torus_artifact(ctx).string());
  json report = base_report(ctx, "verify");
  json items = json::array();
  bool passed = true;
  for (const auto& path : paths) {
    const ArtifactKind kind = artifact_kind(path);
    std::vector<TestReport> tests;
    std::string what;
    switch (kind) {
      case ArtifactKind::kTorus: {
        const TorusSolution sol = load_torus(path);
        tests = verify_torus(sol, *map_for(cfg, sol.dim()), cfg.verify_tol);
        what = "torus";
        break;
      }
      case ArtifactKind::kMultiTorus: {
        const MultiTorus multi = load_multi_torus(path);
        tests = verify_torus(multi.lifted, *map_for(cfg, multi.lifted.dim()), cfg.verify_tol);
        what = "multi-torus";
        break;
      }
      case ArtifactKind::kManifold: {
        ManifoldExpansion e = load_manifold(path);
        const auto map = map_for(cfg, e.dim());
        measure_order_errors(e, *map);
        tests = verify_manifold(e, *map, cfg.verify_tol);
        what = std::string(branch_name(e.branch)) + " manifold";
        break;
      }
      case ArtifactKind::kField: {
        tests.push_back(test_tail(load_field(path), cfg.verify_tol, "series"));
        what = "series";
        break;
      }
    }
    ctx.log << "verify: " << path << " (" << what << ")\n";
    log_tests(ctx.log, tests);
    passed = passed && all_passed(tests);
    items.push_back({{"artifact", path}, {"kind", what}, {"tests", tests_json(tests)}});
  }
  report["artifacts"] = items;
  report["passed"] = passed;
  finish_report(report, ctx, ctx.out / "verify_report.json");
  return passed ? kOk : kTestsFailed;
}

struct SliceArgs {
  std::string artifact;
  std::size_t axis = 0;
  std::string fixed;
  std::string sigmas = "-1,-0.5,0,0.5,1";
  int section = 1;
  std::string csv;
};

int cmd_slice(const SliceArgs& a) {
  std::ofstream file;
  if (!a.csv.empty()) {
    file.open(a.csv);
    if (!file) throw FormatError("cannot write " + a.csv);
  }
  std::ostream& out = a.csv.empty() ? std::cout : file;
  auto fixed_for = [&](std::size_t d) {
    std::vector<double> f = a.fixed.empty() ? std::vector<double>(d, 0.0) : parse_number_list(a.fixed);
    if (f.size() != d) throw FormatError("--fixed needs one angle per dimension");
    return f;
  };
  switch (artifact_kind(a.artifact)) {
    case ArtifactKind::kField: {
      const FourierField f = load_field(a.artifact);
      write_torus_slice(out, f, a.axis, fixed_for(f.mesh().dims()));
      break;
    }
    case ArtifactKind::kTorus: {
      const TorusSolution sol = load_torus(a.artifact);
      write_torus_slice(out, sol.torus, a.axis, fixed_for(sol.mesh().dims()));
      break;
    }
    case ArtifactKind::kMultiTorus: {
      const MultiTorus multi = load_multi_torus(a.artifact);
      if (a.section < 1 || a.section > multi.sections) throw FormatError("--section out of range");
      const FourierField& t = multi.tori[static_cast<std::size_t>(a.section - 1)];
      write_torus_slice(out, t, a.axis, fixed_for(t.mesh().dims()));
      break;
    }
    case ArtifactKind::kManifold: {
      const ManifoldExpansion e = load_manifold(a.artifact);
      write_manifold_slice(out, e, a.axis, fixed_for(e.mesh().dims()), parse_number_list(a.sigmas));
      break;
    }
  }
  out.flush();
  if (!out) throw FormatError("slice write failed");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reducible invariant tori and their invariant manifolds"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  std::string out_dir;
  std::string resume;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value run configuration")->check(CLI::ExistingFile);
    sub->add_option("--threads", threads, "worker threads (overrides QPTORI_THREADS and the config)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--resume", resume, "torus artifact to start from or to read");
  };

  auto* torus = app.add_subcommand("torus", "invariant torus, Floquet change and matrix");
  add_common(torus);
  auto* manifold = app.add_subcommand("manifold", "stable/unstable manifold expansions of a torus");
  add_common(manifold);
  auto* verify = app.add_subcommand("verify", "rerun Tests 1-4 on persisted artifacts");
  add_common(verify);
  std::vector<std::string> verify_paths;
  verify->add_option("artifacts", verify_paths, "artifact files (default: the torus in --out)");

  auto* slice = app.add_subcommand("slice", "tabulate a torus or manifold along one angle");
  add_common(slice);
  SliceArgs slice_args;
  slice->add_option("--artifact", slice_args.artifact, "artifact file")->required()->check(CLI::ExistingFile);
  slice->add_option("--axis", slice_args.axis, "angle index that varies (0-based)");
  slice->add_option("--fixed", slice_args.fixed, "comma list of fixed angles in radians");
  slice->add_option("--sigma", slice_args.sigmas, "comma list of manifold parameters");
  slice->add_option("--section", slice_args.section, "section of a multi-torus (1-based)");
  slice->add_option("--csv", slice_args.csv, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    Context ctx;
    if (!config_path.empty()) ctx.cfg = load_config(config_path);
    if (!out_dir.empty()) ctx.cfg.output = out_dir;
    ctx.out = ctx.cfg.output;
    ctx.resume = resume;
    ctx.threads = resolve_threads(threads, ctx.cfg.threads);
    set_thread_count(ctx.threads);
    global_profile().reset();

    if (slice->parsed()) return cmd_slice(slice_args);

    fs::create_directories(ctx.out);
    if (torus->parsed()) {
      ctx.log.open(ctx.out / "torus.log");
      write_text(ctx.out / "torus.cfg", format_config(ctx.cfg));
      return cmd_torus(ctx);
    }
    if (manifold->parsed()) {
      ctx.log.open(ctx.out / "manifold.log");
      return cmd_manifold(ctx);
    }
    ctx.log.open(ctx.out / "verify.log");
    return cmd_verify(ctx, verify_paths);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const ResonanceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kResonance;
  } catch (const SpectrumError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSpectrum;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const IntegrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIntegration;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
