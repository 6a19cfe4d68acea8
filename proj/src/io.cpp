#include "qptori/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "qptori/errors.hpp"
#include "qptori/pointwise.hpp"

namespace qptori {

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr char kFieldMagic[] = "QPTORI-F";
constexpr char kTorusMagic[] = "QPTORI-T";
constexpr char kManifoldMagic[] = "QPTORI-M";
constexpr char kMultiMagic[] = "QPTORI-R";

// Sanity bounds that keep a corrupted header from requesting absurd memory.
constexpr std::int64_t kHeaderMaxAngles = 16;
constexpr std::int64_t kMaxDim = 1 << 16;
constexpr std::int64_t kMaxModes = 1 << 20;
constexpr std::int64_t kMaxOrder = 1 << 12;

void put_u64(std::ostream& out, std::uint64_t u) {
  std::array<char, 8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xffu);
  out.write(b.data(), 8);
}

void put_i64(std::ostream& out, std::int64_t v) { put_u64(out, static_cast<std::uint64_t>(v)); }

void put_f64(std::ostream& out, double v) {
  std::uint64_t u = 0;
  std::memcpy(&u, &v, sizeof u);
  put_u64(out, u);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw FormatError("truncated artifact");
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return u;
}

std::int64_t get_i64(std::istream& in) { return static_cast<std::int64_t>(get_u64(in)); }

double get_f64(std::istream& in) {
  const std::uint64_t u = get_u64(in);
  double v = 0.0;
  std::memcpy(&v, &u, sizeof v);
  return v;
}

std::int64_t get_bounded(std::istream& in, std::int64_t lo, std::int64_t hi, const char* what) {
  const std::int64_t v = get_i64(in);
  if (v < lo || v > hi) throw FormatError(std::string("invalid ") + what + " in artifact header");
  return v;
}

void put_magic(std::ostream& out, const char* magic) {
  out.write(magic, kMagicSize);
  put_i64(out, kFormatVersion);
}

void expect_magic(std::istream& in, const char* magic) {
  std::array<char, kMagicSize> b{};
  in.read(b.data(), kMagicSize);
  if (!in || std::memcmp(b.data(), magic, kMagicSize) != 0) {
    throw FormatError(std::string("not a ") + magic + " artifact");
  }
  const std::int64_t version = get_i64(in);
  if (version != kFormatVersion) {
    throw FormatError("unsupported artifact version " + std::to_string(version));
  }
}

void put_reals(std::ostream& out, std::span<const double> v) {
  for (double x : v) put_f64(out, x);
}

std::vector<double> get_reals(std::istream& in, std::size_t count) {
  std::vector<double> v(count);
  for (auto& x : v) x = get_f64(in);
  return v;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& M) {
  put_reals(out, std::span<const double>(M.data(), static_cast<std::size_t>(M.size())));
}

Eigen::MatrixXd get_matrix(std::istream& in, std::size_t n) {
  const std::vector<double> v = get_reals(in, n * n);
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), static_cast<Eigen::Index>(n),
                                           static_cast<Eigen::Index>(n));
}

FourierMatrix get_square(std::istream& in, std::size_t n) {
  FourierField f = read_field(in);
  if (f.dim() != n * n) throw FormatError("matrix series has wrong size");
  return {n, n, std::move(f)};
}

void check_mesh(const FourierField& f, const Mesh& mesh, std::size_t dim) {
  if (!(f.mesh() == mesh) || f.dim() != dim) throw FormatError("series does not match the artifact header");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  return in;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw FormatError("write failed for " + path.string());
}

void put_csv_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_field(std::ostream& out, const FourierField& field) {
  const FourierField c = field.analyze();
  const Mesh& mesh = c.mesh();
  put_magic(out, kFieldMagic);
  put_i64(out, static_cast<std::int64_t>(mesh.dims()));
  put_i64(out, static_cast<std::int64_t>(c.dim()));
  for (int N : mesh.sizes()) put_i64(out, N);
  for (const Complex& z : c.coefficients()) {
    put_f64(out, z.real());
    put_f64(out, z.imag());
  }
  if (!out) throw FormatError("write failed");
}

FourierField read_field(std::istream& in) {
  expect_magic(in, kFieldMagic);
  const auto d = static_cast<std::size_t>(get_bounded(in, 1, kHeaderMaxAngles, "angle count"));
  const auto n = static_cast<std::size_t>(get_bounded(in, 1, kMaxDim, "dimension"));
  std::vector<int> sizes(d);
  for (auto& N : sizes) {
    N = static_cast<int>(get_bounded(in, 1, kMaxModes, "mesh size"));
    if (N % 2 == 0) throw FormatError("mesh sizes must be odd");
  }
  const Mesh mesh(sizes);
  if (mesh.coeff_size() > static_cast<std::size_t>(kMaxModes) * 64) throw FormatError("mesh too large");
  std::vector<Complex> coeffs(mesh.coeff_size() * n);
  for (auto& z : coeffs) {
    const double re = get_f64(in);
    const double im = get_f64(in);
    z = {re, im};
  }
  return FourierField::from_coefficients(mesh, n, std::move(coeffs));
}

void write_coefficient_csv(std::ostream& out, const FourierField& field) {
  const FourierField c = field.analyze();
  const Mesh& mesh = c.mesh();
  const std::size_t n = c.dim();
  const std::size_t d = mesh.dims();
  const auto coeffs = c.coefficients();
  std::vector<int> kappa(d);
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    mesh.packed_index_to_tuple(l, kappa);
    bool zero = true;
    bool mirrored = false;
    if (kappa[d - 1] == 0) {
      for (int k : kappa) {
        if (k != 0) {
          zero = false;
          mirrored = k < 0;
          break;
        }
      }
      if (mirrored) continue;
    } else {
      zero = false;
    }
    for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << kappa[j];
    std::vector<double> cos_amp(n);
    std::vector<double> sin_amp(n);
    for (std::size_t i = 0; i < n; ++i) {
      const RealAmplitude a = real_amplitude(coeffs[l * n + i], mesh.grid_size());
      // The mean has no partner frequency.
      cos_amp[i] = zero ? 0.5 * a.cos_amp : a.cos_amp;
      sin_amp[i] = zero ? 0.0 : a.sin_amp;
    }
    for (double v : cos_amp) {
      out << ',';
      put_csv_number(out, v);
    }
    for (double v : sin_amp) {
      out << ',';
      put_csv_number(out, v);
    }
    out << '\n';
  }
}

void write_torus(std::ostream& out, const TorusSolution& sol) {
  const std::size_t n = sol.dim();
  put_magic(out, kTorusMagic);
  put_i64(out, static_cast<std::int64_t>(sol.mesh().dims()));
  put_i64(out, static_cast<std::int64_t>(n));
  put_i64(out, sol.converged ? 1 : 0);
  put_i64(out, sol.iterations);
  put_reals(out, sol.rotation);
  put_matrix(out, sol.floquet);
  write_field(out, sol.torus);
  write_field(out, sol.change.field());
  write_field(out, sol.change_inverse.field());
  if (!out) throw FormatError("write failed");
}

TorusSolution read_torus(std::istream& in) {
  expect_magic(in, kTorusMagic);
  const auto d = static_cast<std::size_t>(get_bounded(in, 1, kHeaderMaxAngles, "angle count"));
  const auto n = static_cast<std::size_t>(get_bounded(in, 1, kMaxDim, "dimension"));
  TorusSolution sol;
  sol.converged = get_bounded(in, 0, 1, "convergence flag") == 1;
  sol.iterations = static_cast<int>(get_bounded(in, 0, kMaxOrder, "iteration count"));
  sol.rotation = get_reals(in, d);
  sol.floquet = get_matrix(in, n);
  sol.torus = read_field(in);
  if (sol.torus.mesh().dims() != d || sol.torus.dim() != n) throw FormatError("torus series does not match header");
  sol.change = get_square(in, n);
  sol.change_inverse = get_square(in, n);
  check_mesh(sol.change.field(), sol.mesh(), n * n);
  check_mesh(sol.change_inverse.field(), sol.mesh(), n * n);
  sol.stop_reason = "loaded";
  return sol;
}

void write_manifold(std::ostream& out, const ManifoldExpansion& e) {
  put_magic(out, kManifoldMagic);
  put_i64(out, e.branch == Branch::kUnstable ? 1 : 0);
  put_f64(out, e.eigenvalue);
  put_f64(out, e.scaling);
  put_i64(out, e.order());
  put_i64(out, static_cast<std::int64_t>(e.mesh().dims()));
  put_i64(out, static_cast<std::int64_t>(e.dim()));
  put_reals(out, e.rotation);
  put_reals(out, std::span<const double>(e.eigenvector.data(), static_cast<std::size_t>(e.eigenvector.size())));
  for (const auto& a : e.stored) write_field(out, a);
  if (!out) throw FormatError("write failed");
}

ManifoldExpansion read_manifold(std::istream& in) {
  expect_magic(in, kManifoldMagic);
  ManifoldExpansion e;
  e.branch = get_bounded(in, 0, 1, "branch") == 1 ? Branch::kUnstable : Branch::kStable;
  e.eigenvalue = get_f64(in);
  e.scaling = get_f64(in);
  const auto m = static_cast<std::size_t>(get_bounded(in, 0, kMaxOrder, "order"));
  const auto d = static_cast<std::size_t>(get_bounded(in, 1, kHeaderMaxAngles, "angle count"));
  const auto n = static_cast<std::size_t>(get_bounded(in, 1, kMaxDim, "dimension"));
  e.rotation = get_reals(in, d);
  const std::vector<double> v = get_reals(in, n);
  e.eigenvector = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k <= m; ++k) {
    e.stored.push_back(read_field(in));
    if (e.stored.back().dim() != n || e.stored.back().mesh().dims() != d ||
        !(e.stored.back().mesh() == e.stored.front().mesh())) {
      throw FormatError("manifold series does not match header");
    }
  }
  return e;
}

void write_multi_torus(std::ostream& out, const MultiTorus& multi) {
  const std::size_t n = multi.dim();
  const auto ru = static_cast<std::size_t>(multi.sections);
  put_magic(out, kMultiMagic);
  put_i64(out, multi.sections);
  put_i64(out, static_cast<std::int64_t>(multi.lifted.mesh().dims()));
  put_i64(out, static_cast<std::int64_t>(n));
  put_i64(out, multi.lifted.converged ? 1 : 0);
  put_i64(out, multi.lifted.iterations);
  put_reals(out, multi.rotation);
  // Section inverses are the diagonal blocks of the lifted inverse change.
  const std::size_t N = n * ru;
  const FourierField inv = multi.lifted.change_inverse.field().analyze();
  const auto iv = inv.coefficients();
  const std::size_t K = inv.mesh().coeff_size();
  for (std::size_t j = 0; j < ru; ++j) {
    put_i64(out, static_cast<std::int64_t>(j + 1));
    put_matrix(out, multi.matrices[j]);
    write_field(out, multi.tori[j]);
    write_field(out, multi.changes[j].field());
    std::vector<Complex> block(K * n * n);
    for (std::size_t l = 0; l < K; ++l) {
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) {
          block[l * n * n + c * n + r] = iv[l * N * N + (j * n + c) * N + j * n + r];
        }
      }
    }
    write_field(out, FourierField::from_coefficients(inv.mesh(), n * n, std::move(block)));
  }
  if (!out) throw FormatError("write failed");
}

MultiTorus read_multi_torus(std::istream& in) {
  expect_magic(in, kMultiMagic);
  const int r = static_cast<int>(get_bounded(in, 1, 1024, "section count"));
  const auto d = static_cast<std::size_t>(get_bounded(in, 1, kHeaderMaxAngles, "angle count"));
  const auto n = static_cast<std::size_t>(get_bounded(in, 1, kMaxDim, "dimension"));
  const bool converged = get_bounded(in, 0, 1, "convergence flag") == 1;
  const int iterations = static_cast<int>(get_bounded(in, 0, kMaxOrder, "iteration count"));
  const std::vector<double> rotation = get_reals(in, d);

  const auto ru = static_cast<std::size_t>(r);
  std::vector<Eigen::MatrixXd> matrices;
  std::vector<FourierField> tori;
  std::vector<FourierMatrix> changes;
  std::vector<FourierMatrix> inverses;
  for (std::size_t j = 0; j < ru; ++j) {
    if (get_i64(in) != static_cast<std::int64_t>(j + 1)) throw FormatError("section tags out of order");
    matrices.push_back(get_matrix(in, n));
    tori.push_back(read_field(in));
    changes.push_back(get_square(in, n));
    inverses.push_back(get_square(in, n));
    const Mesh& mesh = tori.front().mesh();
    if (mesh.dims() != d) throw FormatError("section series does not match header");
    check_mesh(tori.back(), mesh, n);
    check_mesh(changes.back().field(), mesh, n * n);
    check_mesh(inverses.back().field(), mesh, n * n);
  }

  // Rebuild the lifted solution: stacked torus, block-diagonal change and
  // block-cyclic Floquet matrix.
  const Mesh mesh = tori.front().mesh();
  const std::size_t K = mesh.coeff_size();
  const std::size_t N = n * ru;
  std::vector<Complex> torus(K * N);
  std::vector<Complex> change(K * N * N, Complex{});
  std::vector<Complex> change_inv(K * N * N, Complex{});
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t j = 0; j < ru; ++j) {
    const FourierField t = tori[j].analyze();
    const FourierField c = changes[j].field().analyze();
    const FourierField ci = inverses[j].field().analyze();
    const auto tv = t.coefficients();
    const auto cv = c.coefficients();
    const auto civ = ci.coefficients();
    for (std::size_t l = 0; l < K; ++l) {
      for (std::size_t a = 0; a < n; ++a) torus[l * N + j * n + a] = tv[l * n + a];
      for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t row = 0; row < n; ++row) {
          change[l * N * N + (j * n + col) * N + j * n + row] = cv[l * n * n + col * n + row];
          change_inv[l * N * N + (j * n + col) * N + j * n + row] = civ[l * n * n + col * n + row];
        }
      }
    }
    B.block(static_cast<Eigen::Index>(((j + 1) % ru) * n), static_cast<Eigen::Index>(j * n),
            static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = matrices[j];
  }

  MultiTorus multi;
  multi.sections = r;
  multi.tori = std::move(tori);
  multi.changes = std::move(changes);
  multi.matrices = std::move(matrices);
  multi.rotation = rotation;
  multi.lifted.torus = FourierField::from_coefficients(mesh, N, std::move(torus));
  multi.lifted.change = FourierMatrix(N, N, FourierField::from_coefficients(mesh, N * N, std::move(change)));
  multi.lifted.change_inverse =
      FourierMatrix(N, N, FourierField::from_coefficients(mesh, N * N, std::move(change_inv)));
  multi.lifted.floquet = B;
  multi.lifted.rotation = rotation;
  multi.lifted.converged = converged;
  multi.lifted.iterations = iterations;
  multi.lifted.stop_reason = "loaded";
  return multi;
}

ArtifactKind artifact_kind(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::array<char, kMagicSize> b{};
  in.read(b.data(), kMagicSize);
  if (!in) throw FormatError("truncated artifact " + path.string());
  if (std::memcmp(b.data(), kFieldMagic, kMagicSize) == 0) return ArtifactKind::kField;
  if (std::memcmp(b.data(), kTorusMagic, kMagicSize) == 0) return ArtifactKind::kTorus;
  if (std::memcmp(b.data(), kManifoldMagic, kMagicSize) == 0) return ArtifactKind::kManifold;
  if (std::memcmp(b.data(), kMultiMagic, kMagicSize) == 0) return ArtifactKind::kMultiTorus;
  throw FormatError("unknown artifact type in " + path.string());
}

void save_field(const std::filesystem::path& path, const FourierField& field) {
  auto out = open_out(path);
  write_field(out, field);
  finish(out, path);
}

FourierField load_field(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_field(in);
}

void save_torus(const std::filesystem::path& path, const TorusSolution& sol) {
  auto out = open_out(path);
  write_torus(out, sol);
  finish(out, path);
}

TorusSolution load_torus(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_torus(in);
}

void save_manifold(const std::filesystem::path& path, const ManifoldExpansion& expansion) {
  auto out = open_out(path);
  write_manifold(out, expansion);
  finish(out, path);
}

ManifoldExpansion load_manifold(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_manifold(in);
}

void save_multi_torus(const std::filesystem::path& path, const MultiTorus& multi) {
  auto out = open_out(path);
  write_multi_torus(out, multi);
  finish(out, path);
}

MultiTorus load_multi_torus(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_multi_torus(in);
}

void write_torus_slice(std::ostream& out, const FourierField& torus, std::size_t axis,
                       std::span<const double> fixed) {
  const Mesh& mesh = torus.mesh();
  if (axis >= mesh.dims()) throw DomainError("slice axis out of range");
  if (fixed.size() != mesh.dims()) throw DomainError("slice needs one fixed angle per dimension");
  const FourierField c = torus.analyze();
  std::vector<double> theta(fixed.begin(), fixed.end());
  const int N = mesh.size(axis);
  for (int k = 0; k < N; ++k) {
    theta[axis] = kTwoPi * k / N;
    const std::vector<double> x = evaluate(c, theta);
    put_csv_number(out, theta[axis]);
    for (double v : x) {
      out << ',';
      put_csv_number(out, v);
    }
    out << '\n';
  }
}

void write_manifold_slice(std::ostream& out, const ManifoldExpansion& expansion, std::size_t axis,
                          std::span<const double> fixed, std::span<const double> sigmas) {
  const Mesh& mesh = expansion.mesh();
  if (axis >= mesh.dims()) throw DomainError("slice axis out of range");
  if (fixed.size() != mesh.dims()) throw DomainError("slice needs one fixed angle per dimension");
  std::vector<double> theta(fixed.begin(), fixed.end());
  const int N = mesh.size(axis);
  for (int k = 0; k < N; ++k) {
    theta[axis] = kTwoPi * k / N;
    for (double sigma : sigmas) {
      const std::vector<double> w = expansion.evaluate(theta, sigma);
      put_csv_number(out, theta[axis]);
      out << ',';
      put_csv_number(out, sigma);
      for (double v : w) {
        out << ',';
        put_csv_number(out, v);
      }
      out << '\n';
    }
  }
}

}  // namespace qptori
