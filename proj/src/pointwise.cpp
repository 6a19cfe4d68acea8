#include "qptori/pointwise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qptori/errors.hpp"
#include "qptori/parallel.hpp"
#include "qptori/profile.hpp"

namespace qptori {

namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using Map = Eigen::Map<Eigen::MatrixXd>;

void require_same_mesh(const Mesh& a, const Mesh& b) {
  if (!(a == b)) throw std::invalid_argument("fields live on different meshes");
}

}  // namespace

FourierField multiply(const FourierMatrix& A, const FourierField& x) {
  require_same_mesh(A.mesh(), x.mesh());
  if (A.cols() != x.dim()) throw std::invalid_argument("matrix-vector size mismatch");
  const FourierField ag = A.field().synthesize();
  const FourierField xg = x.synthesize();
  ScopedPhase timer(phase::kPointwise);
  const auto r = static_cast<Eigen::Index>(A.rows());
  const auto c = static_cast<Eigen::Index>(A.cols());
  const std::size_t M = ag.mesh().grid_size();
  std::vector<double> out(M * A.rows());
  const double* a = ag.values().data();
  const double* v = xg.values().data();
  parallel_for(M, [&](std::size_t l) {
    Map(out.data() + l * A.rows(), r, 1) =
        ConstMap(a + l * A.rows() * A.cols(), r, c) * ConstMap(v + l * A.cols(), c, 1);
  });
  return FourierField::from_values(ag.mesh(), A.rows(), std::move(out));
}

FourierMatrix multiply(const FourierMatrix& A, const FourierMatrix& B) {
  require_same_mesh(A.mesh(), B.mesh());
  if (A.cols() != B.rows()) throw std::invalid_argument("matrix-matrix size mismatch");
  const FourierField ag = A.field().synthesize();
  const FourierField bg = B.field().synthesize();
  ScopedPhase timer(phase::kPointwise);
  const auto r = static_cast<Eigen::Index>(A.rows());
  const auto k = static_cast<Eigen::Index>(A.cols());
  const auto c = static_cast<Eigen::Index>(B.cols());
  const std::size_t M = ag.mesh().grid_size();
  const std::size_t out_size = A.rows() * B.cols();
  std::vector<double> out(M * out_size);
  const double* a = ag.values().data();
  const double* b = bg.values().data();
  parallel_for(M, [&](std::size_t l) {
    Map(out.data() + l * out_size, r, c) =
        ConstMap(a + l * A.rows() * A.cols(), r, k) * ConstMap(b + l * B.rows() * B.cols(), k, c);
  });
  return {A.rows(), B.cols(), FourierField::from_values(ag.mesh(), out_size, std::move(out))};
}

FourierMatrix subtract_constant(const FourierMatrix& A, const Eigen::MatrixXd& M) {
  if (static_cast<std::size_t>(M.rows()) != A.rows() ||
      static_cast<std::size_t>(M.cols()) != A.cols()) {
    throw std::invalid_argument("matrix size mismatch");
  }
  const FourierField ag = A.field().synthesize();
  ScopedPhase timer(phase::kPointwise);
  std::vector<double> out(ag.values().begin(), ag.values().end());
  const std::size_t size = A.rows() * A.cols();
  for (std::size_t l = 0; l < ag.mesh().grid_size(); ++l) {
    for (std::size_t e = 0; e < size; ++e) out[l * size + e] -= M.data()[e];
  }
  return {A.rows(), A.cols(), FourierField::from_values(ag.mesh(), size, std::move(out))};
}

FourierMatrix invert(const FourierMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("only square matrices can be inverted");
  const FourierField ag = A.field().synthesize();
  ScopedPhase timer(phase::kPointwise);
  const auto n = static_cast<Eigen::Index>(A.rows());
  const std::size_t size = A.rows() * A.cols();
  const std::size_t M = ag.mesh().grid_size();
  std::vector<double> out(M * size);
  const double* a = ag.values().data();
  parallel_for(M, [&](std::size_t l) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ConstMap(a + l * size, n, n));
    if (!lu.isInvertible()) throw DomainError("matrix field is singular at a grid point");
    Map(out.data() + l * size, n, n) = lu.inverse();
  });
  return {A.rows(), A.cols(), FourierField::from_values(ag.mesh(), size, std::move(out))};
}

FourierField combine(double a, const FourierField& x, double b, const FourierField& y) {
  require_same_mesh(x.mesh(), y.mesh());
  if (x.dim() != y.dim()) throw std::invalid_argument("field dimensions differ");
  const FourierField xg = x.synthesize();
  const FourierField yg = y.synthesize();
  ScopedPhase timer(phase::kPointwise);
  std::vector<double> out(xg.values().size());
  const auto xv = xg.values();
  const auto yv = yg.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * xv[i] + b * yv[i];
  return FourierField::from_values(xg.mesh(), xg.dim(), std::move(out));
}

FourierMatrix combine(double a, const FourierMatrix& x, double b, const FourierMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw std::invalid_argument("matrix sizes differ");
  return {x.rows(), x.cols(), combine(a, x.field(), b, y.field())};
}

double max_norm(const FourierField& x) {
  const FourierField xg = x.synthesize();
  const auto v = xg.values();
  double best = 0.0;
  for (std::size_t l = 0; l < xg.mesh().grid_size(); ++l) {
    double s = 0.0;
    for (std::size_t c = 0; c < xg.dim(); ++c) s += v[l * xg.dim() + c] * v[l * xg.dim() + c];
    if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

double max_norm(const FourierMatrix& A) { return max_norm(A.field()); }

Eigen::MatrixXd matrix_at(const FourierMatrix& grid, std::size_t point) {
  const auto v = grid.field().values();
  const std::size_t size = grid.rows() * grid.cols();
  return ConstMap(v.data() + point * size, static_cast<Eigen::Index>(grid.rows()),
                  static_cast<Eigen::Index>(grid.cols()));
}

}  // namespace qptori
