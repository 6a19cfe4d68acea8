#include "qptori/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qptori/errors.hpp"

namespace qptori {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s) {
  if (s.empty()) throw FormatError("empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw FormatError("not a number: '" + s + "'");
  }
  return v;
}

int to_int(const std::string& s) {
  if (s.empty()) throw FormatError("empty integer");
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE || v < -1000000000L || v > 1000000000L) {
    throw FormatError("not an integer: '" + s + "'");
  }
  return static_cast<int>(v);
}

double positive(const std::string& s) {
  const double v = to_double(s);
  if (!(v > 0.0)) throw FormatError("value must be positive: '" + s + "'");
  return v;
}

std::string number_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void apply(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "model") {
    if (value.empty()) throw FormatError("empty model id");
    c.model = value;
  } else if (key.rfind("model.", 0) == 0) {
    c.model_params[key.substr(6)] = value;
  } else if (key == "mesh") {
    c.mesh.clear();
    for (const auto& item : split_list(value)) {
      const int N = to_int(item);
      if (N < 1 || N % 2 == 0) throw FormatError("mesh sizes must be odd and positive");
      c.mesh.push_back(N);
    }
    if (c.mesh.empty()) throw FormatError("empty mesh");
  } else if (key == "newton.tol") {
    c.newton_tol = positive(value);
  } else if (key == "newton.max_iter") {
    c.newton_max_iter = to_int(value);
    if (c.newton_max_iter < 1) throw FormatError("newton.max_iter must be at least 1");
  } else if (key == "integrator.tol") {
    c.integrator_tol = positive(value);
  } else if (key == "manifold.order") {
    c.manifold_order = to_int(value);
    if (c.manifold_order < 1) throw FormatError("manifold.order must be at least 1");
  } else if (key == "manifold.branches") {
    c.branches.clear();
    for (const auto& item : split_list(value)) {
      try {
        c.branches.push_back(parse_branch(item));
      } catch (const DomainError& e) {
        throw FormatError(e.what());
      }
    }
  } else if (key == "manifold.scaling") {
    if (value == "auto") {
      c.auto_scaling = true;
      c.manifold_scaling = 1.0;
    } else {
      c.auto_scaling = false;
      c.manifold_scaling = positive(value);
    }
  } else if (key == "sections") {
    if (value == "auto") {
      c.sections = 0;
    } else {
      c.sections = to_int(value);
      if (c.sections < 1) throw FormatError("sections must be at least 1 or auto");
    }
  } else if (key == "threads") {
    c.threads = to_int(value);
    if (c.threads < 0) throw FormatError("threads must be non-negative");
  } else if (key == "output") {
    c.output = value;
  } else if (key == "seed") {
    c.seed = value.empty() ? "builtin" : value;
  } else if (key == "seed.point") {
    c.seed_point = parse_number_list(value);
  } else if (key == "verify.tol") {
    c.verify_tol = positive(value);
  } else {
    throw FormatError("unknown key '" + key + "'");
  }
}

}  // namespace

std::vector<int> RunConfig::mesh_for(std::size_t d) const {
  if (mesh.size() == 1) return std::vector<int>(d, mesh.front());
  if (mesh.size() != d) throw FormatError("mesh lists a different number of angles than the model");
  return mesh;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(item));
  return out;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw FormatError("unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("expected key = value");
      std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw FormatError("empty key");
      if (!section.empty()) key = section + "." + key;
      apply(c, key, value);
    } catch (const FormatError& e) {
      throw FormatError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os << "model = " << c.model << '\n';
  for (const auto& [k, v] : c.model_params) os << "model." << k << " = " << v << '\n';
  os << "mesh = ";
  for (std::size_t i = 0; i < c.mesh.size(); ++i) os << (i ? "," : "") << c.mesh[i];
  os << '\n';
  os << "newton.tol = " << number_text(c.newton_tol) << '\n';
  os << "newton.max_iter = " << c.newton_max_iter << '\n';
  os << "integrator.tol = " << number_text(c.integrator_tol) << '\n';
  os << "manifold.order = " << c.manifold_order << '\n';
  os << "manifold.branches = ";
  for (std::size_t i = 0; i < c.branches.size(); ++i) os << (i ? "," : "") << branch_name(c.branches[i]);
  os << '\n';
  os << "manifold.scaling = " << (c.auto_scaling ? std::string("auto") : number_text(c.manifold_scaling))
     << '\n';
  os << "sections = " << (c.sections == 0 ? std::string("auto") : std::to_string(c.sections)) << '\n';
  os << "threads = " << c.threads << '\n';
  os << "output = " << c.output << '\n';
  os << "seed = " << c.seed << '\n';
  if (!c.seed_point.empty()) {
    os << "seed.point = ";
    for (std::size_t i = 0; i < c.seed_point.size(); ++i) os << (i ? "," : "") << number_text(c.seed_point[i]);
    os << '\n';
  }
  os << "verify.tol = " << number_text(c.verify_tol) << '\n';
  return os.str();
}

}  // namespace qptori
