#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qptori/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path p = fs::temp_directory_path() / "qptori_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << text;
  return p;
}

const char* kDeskConfig =
    "model = pendulum\n"
    "mesh = 31\n"
    "manifold.order = 3\n"
    "[model]\n"
    "d = 2\n"
    "eps = 0.01\n"
    "alpha = 0.8\n";

int run(const std::string& args) {
  const std::string cmd = std::string(QPTORI_CLI) + " " + args + " > " + (work_dir() / "last_stdout.txt").string() +
                          " 2> " + (work_dir() / "last_stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  const auto text = read_text(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Desk torus computed once; returns its output directory.
const fs::path& desk_run() {
  static const fs::path out = [] {
    const auto cfg = write_file("desk.cfg", kDeskConfig);
    const fs::path dir = work_dir() / "desk";
    const int code = run("torus --config " + cfg.string() + " --out " + dir.string() + " --threads 1");
    EXPECT_EQ(code, 0) << read_text(work_dir() / "last_stderr.txt");
    return dir;
  }();
  return out;
}

double norm_spread(const json& branch) {
  // max / min of the coefficient norms from order 1 up.
  double lo = 1e300, hi = 0.0;
  const auto& norms = branch.at("coefficient_norms");
  for (std::size_t k = 1; k < norms.size(); ++k) {
    const double v = norms[k].get<double>();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi / lo;
}

}  // namespace

TEST(Cli, TorusDeskRun) {
  const auto& dir = desk_run();
  for (const char* f : {"torus.qpt", "torus_coefficients.csv", "torus_report.json", "torus.log", "torus.cfg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto report = read_json(dir / "torus_report.json");
  EXPECT_TRUE(report.at("converged").get<bool>());
  EXPECT_LE(report.at("iterations").get<int>(), 4);
  for (const auto& t : report.at("tests")) EXPECT_TRUE(t.at("passed").get<bool>()) << t.dump();
  EXPECT_TRUE(report.at("resonance_flags").empty());
  EXPECT_TRUE(report.contains("wall_time_seconds"));
  EXPECT_TRUE(report.contains("profile"));
  // One CSV row per real frequency pair: (31 * 31 + 1) / 2.
  EXPECT_EQ(count_lines(dir / "torus_coefficients.csv"), 481u);
}

TEST(Cli, VerifyFreshTorusPasses) {
  const auto& dir = desk_run();
  const auto cfg = work_dir() / "desk.cfg";
  EXPECT_EQ(run("verify --config " + cfg.string() + " --out " + dir.string()), 0);
  EXPECT_TRUE(read_json(dir / "verify_report.json").at("passed").get<bool>());
}

TEST(Cli, VerifyCorruptedModeFails) {
  const auto& dir = desk_run();
  auto sol = qptori::load_torus(dir / "torus.qpt");
  std::vector<qptori::Complex> c(sol.torus.coefficients().begin(), sol.torus.coefficients().end());
  c[2 * 3] += 1e-6 * static_cast<double>(sol.mesh().grid_size());
  sol.torus = qptori::FourierField::from_coefficients(sol.mesh(), 2, c);
  const fs::path bad_dir = work_dir() / "corrupt";
  fs::create_directories(bad_dir);
  qptori::save_torus(bad_dir / "torus.qpt", sol);
  const auto cfg = work_dir() / "desk.cfg";
  EXPECT_EQ(run("verify --config " + cfg.string() + " --out " + bad_dir.string() + " " +
                (bad_dir / "torus.qpt").string()),
            6);
  const auto report = read_json(bad_dir / "verify_report.json");
  EXPECT_FALSE(report.at("passed").get<bool>());
  bool test1_failed = false;
  for (const auto& t : report.at("artifacts")[0].at("tests")) {
    if (t.at("id").get<int>() == 1 && !t.at("passed").get<bool>()) test1_failed = true;
  }
  EXPECT_TRUE(test1_failed);
}

TEST(Cli, SliceHasOneRowPerGridPoint) {
  const auto& dir = desk_run();
  const auto csv = work_dir() / "slice.csv";
  EXPECT_EQ(run("slice --artifact " + (dir / "torus.qpt").string() + " --axis 0 --fixed 0,0 --csv " +
                csv.string()),
            0);
  EXPECT_EQ(count_lines(csv), 31u);
}

TEST(Cli, ManifoldBothBranches) {
  // At m = 3 the pendulum's small even-order coefficients can keep Test 4
  // from seeing the order-4 regime above round-off, so the exit code has to
  // agree with the report rather than be 0.
  const auto& dir = desk_run();
  const auto cfg = work_dir() / "desk.cfg";
  const int code = run("manifold --config " + cfg.string() + " --out " + dir.string());
  const auto report = read_json(dir / "manifold_report.json");
  ASSERT_EQ(report.at("branches").size(), 2u);
  bool all_tests = true;
  for (const auto& b : report.at("branches")) {
    EXPECT_EQ(b.at("order_errors").size(), 4u);
    for (const auto& e : b.at("order_errors")) EXPECT_LE(e.get<double>(), 1e-10);
    for (const auto& t : b.at("tests")) {
      if (t.at("id").get<int>() != 4) {
        EXPECT_TRUE(t.at("passed").get<bool>()) << t.dump();
      }
      all_tests = all_tests && t.at("passed").get<bool>();
    }
  }
  EXPECT_EQ(code, all_tests ? 0 : 6) << read_text(work_dir() / "last_stderr.txt");
  EXPECT_TRUE(fs::exists(dir / "manifold_unstable.qpt"));
  EXPECT_TRUE(fs::exists(dir / "manifold_stable.qpt"));
  EXPECT_TRUE(fs::exists(dir / "manifold_unstable_slice.csv"));
}

TEST(Cli, ManifoldOrderSixVerifies) {
  const auto& dir = desk_run();
  const auto cfg = write_file("order6.cfg", std::string(kDeskConfig) + "[manifold]\norder = 6\n");
  const fs::path out = work_dir() / "order6";
  const auto torus = (dir / "torus.qpt").string();
  EXPECT_EQ(run("manifold --config " + cfg.string() + " --out " + out.string() + " --resume " + torus), 0)
      << read_text(work_dir() / "last_stderr.txt");
  EXPECT_EQ(run("verify --config " + cfg.string() + " --out " + out.string() + " " +
                (out / "manifold_unstable.qpt").string() + " " + (out / "manifold_stable.qpt").string()),
            0);
  EXPECT_TRUE(read_json(out / "verify_report.json").at("passed").get<bool>());
}

TEST(Cli, AutomaticScalingFlattensCoefficients) {
  const auto& dir = desk_run();
  const auto fixed_cfg = write_file("fixed.cfg", std::string(kDeskConfig) +
                                                     "[manifold]\norder = 6\nbranches = unstable\nscaling = 1\n");
  const auto auto_cfg = write_file("auto.cfg", std::string(kDeskConfig) +
                                                   "[manifold]\norder = 6\nbranches = unstable\nscaling = auto\n");
  const auto torus = (dir / "torus.qpt").string();
  const fs::path a = work_dir() / "fixed_scale";
  const fs::path b = work_dir() / "auto_scale";
  ASSERT_EQ(run("manifold --config " + fixed_cfg.string() + " --out " + a.string() + " --resume " + torus), 0);
  ASSERT_EQ(run("manifold --config " + auto_cfg.string() + " --out " + b.string() + " --resume " + torus), 0);
  const auto ra = read_json(a / "manifold_report.json").at("branches")[0];
  const auto rb = read_json(b / "manifold_report.json").at("branches")[0];
  EXPECT_TRUE(rb.at("rescaled").get<bool>());
  EXPECT_LT(norm_spread(rb), norm_spread(ra));
}

TEST(Cli, ThreadCountDoesNotChangeCoefficients) {
  const auto& dir = desk_run();
  const auto cfg = work_dir() / "desk.cfg";
  const fs::path other = work_dir() / "threads2";
  ASSERT_EQ(run("torus --config " + cfg.string() + " --out " + other.string() + " --threads 2"), 0);
  EXPECT_EQ(read_text(dir / "torus_coefficients.csv"), read_text(other / "torus_coefficients.csv"));
  EXPECT_EQ(read_json(other / "torus_report.json").at("threads").get<int>(), 2);
}

TEST(Cli, ExitCodes) {
  const auto bad = write_file("bad.cfg", "mesh = 30\n");
  EXPECT_EQ(run("torus --config " + bad.string() + " --out " + (work_dir() / "bad").string()), 5);
  const auto stuck = write_file("stuck.cfg", std::string(kDeskConfig) + "[newton]\nmax_iter = 1\n");
  EXPECT_EQ(run("torus --config " + stuck.string() + " --out " + (work_dir() / "stuck").string()), 2);
  EXPECT_EQ(run("verify --out " + (work_dir() / "empty").string() + " " + (work_dir() / "desk.cfg").string()), 5);
}
