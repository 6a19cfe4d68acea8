#include "qptori/fourier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "qptori/errors.hpp"
#include "qptori/parallel.hpp"
#include "qptori/profile.hpp"

namespace qptori {

// ---------------------------------------------------------------- Mesh

Mesh::Mesh(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty() || sizes_.size() > kMaxAngles) {
    throw DomainError("mesh needs between 1 and " + std::to_string(kMaxAngles) + " angles");
  }
  grid_size_ = 1;
  for (int n : sizes_) {
    if (n <= 0 || n % 2 == 0) {
      throw DomainError("mesh sizes must be odd and positive, got " + std::to_string(n));
    }
    grid_size_ *= static_cast<std::size_t>(n);
  }
  coeff_size_ = grid_size_ / static_cast<std::size_t>(sizes_.back()) *
                static_cast<std::size_t>(half(dims() - 1) + 1);
}

std::vector<int> Mesh::grid_index_to_tuple(std::size_t index) const {
  if (index >= grid_size_) throw DomainError("grid index out of range");
  std::vector<int> kappa(dims());
  for (std::size_t i = dims(); i-- > 0;) {
    kappa[i] = static_cast<int>(index % static_cast<std::size_t>(sizes_[i]));
    index /= static_cast<std::size_t>(sizes_[i]);
  }
  return kappa;
}

std::vector<int> Mesh::coeff_index_to_tuple(std::size_t index) const {
  if (index >= grid_size_) throw DomainError("coefficient index out of range");
  std::vector<int> kappa(dims());
  for (std::size_t i = dims(); i-- > 0;) {
    int k = static_cast<int>(index % static_cast<std::size_t>(sizes_[i]));
    if (k > sizes_[i] / 2) k -= sizes_[i];
    kappa[i] = k;
    index /= static_cast<std::size_t>(sizes_[i]);
  }
  return kappa;
}

void Mesh::packed_index_to_tuple(std::size_t index, std::span<int> kappa) const {
  if (index >= coeff_size_) throw DomainError("packed coefficient index out of range");
  const std::size_t d = dims();
  const auto last = static_cast<std::size_t>(half(d - 1) + 1);
  kappa[d - 1] = static_cast<int>(index % last);
  index /= last;
  for (std::size_t i = d - 1; i-- > 0;) {
    int k = static_cast<int>(index % static_cast<std::size_t>(sizes_[i]));
    if (k > sizes_[i] / 2) k -= sizes_[i];
    kappa[i] = k;
    index /= static_cast<std::size_t>(sizes_[i]);
  }
}

std::vector<int> Mesh::packed_index_to_tuple(std::size_t index) const {
  std::vector<int> kappa(dims());
  packed_index_to_tuple(index, kappa);
  return kappa;
}

std::size_t Mesh::packed_tuple_to_index(std::span<const int> kappa) const {
  const std::size_t d = dims();
  if (kappa.size() != d) throw DomainError("frequency has wrong length");
  std::size_t index = 0;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    if (std::abs(kappa[i]) > half(i)) throw DomainError("frequency outside mesh");
    const int k = kappa[i] < 0 ? kappa[i] + sizes_[i] : kappa[i];
    index = index * static_cast<std::size_t>(sizes_[i]) + static_cast<std::size_t>(k);
  }
  if (kappa[d - 1] < 0 || kappa[d - 1] > half(d - 1)) {
    throw DomainError("last frequency component outside packed range");
  }
  return index * static_cast<std::size_t>(half(d - 1) + 1) +
         static_cast<std::size_t>(kappa[d - 1]);
}

void Mesh::grid_point(std::size_t index, std::span<double> theta) const {
  if (index >= grid_size_) throw DomainError("grid index out of range");
  for (std::size_t i = dims(); i-- > 0;) {
    const auto n = static_cast<std::size_t>(sizes_[i]);
    theta[i] = kTwoPi * static_cast<double>(index % n) / static_cast<double>(n);
    index /= n;
  }
}

std::vector<double> Mesh::grid_point(std::size_t index) const {
  std::vector<double> theta(dims());
  grid_point(index, theta);
  return theta;
}

// ---------------------------------------------------------- transforms

namespace {

/// exp(-2 pi i j / n) for j = 0..n-1.
const std::vector<Complex>& twiddles(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<std::vector<Complex>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<std::vector<Complex>>(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const double a = -kTwoPi * static_cast<double>(j) / static_cast<double>(n);
      (*slot)[static_cast<std::size_t>(j)] = {std::cos(a), std::sin(a)};
    }
  }
  return *slot;
}

/// Shape of the packed coefficient array.
std::vector<std::size_t> packed_shape(const Mesh& mesh) {
  std::vector<std::size_t> shape(mesh.dims());
  for (std::size_t i = 0; i < mesh.dims(); ++i) shape[i] = static_cast<std::size_t>(mesh.size(i));
  shape.back() = static_cast<std::size_t>(mesh.half(mesh.dims() - 1) + 1);
  return shape;
}

/// In-place complex DFT along axis `axis` (not the last) of a packed array
/// holding `dim` interleaved components. forward: exp(-i...), else exp(+i...).
void transform_axis(std::vector<Complex>& data, const std::vector<std::size_t>& shape,
                    std::size_t dim, std::size_t axis, bool forward) {
  const std::size_t len = shape[axis];
  if (len == 1) return;
  std::size_t stride = 1;
  for (std::size_t i = axis + 1; i < shape.size(); ++i) stride *= shape[i];
  std::size_t total = 1;
  for (auto s : shape) total *= s;
  const std::size_t lines = total / len;
  const auto& w = twiddles(static_cast<int>(len));
  parallel_for(lines, [&](std::size_t q) {
    const std::size_t outer = q / stride;
    const std::size_t inner = q % stride;
    const std::size_t base = outer * len * stride + inner;
    std::vector<Complex> in(len * dim);
    for (std::size_t m = 0; m < len; ++m) {
      for (std::size_t c = 0; c < dim; ++c) in[m * dim + c] = data[(base + m * stride) * dim + c];
    }
    for (std::size_t k = 0; k < len; ++k) {
      for (std::size_t c = 0; c < dim; ++c) {
        Complex acc = 0.0;
        std::size_t idx = 0;
        for (std::size_t m = 0; m < len; ++m) {
          const Complex tw = forward ? w[idx] : std::conj(w[idx]);
          acc += in[m * dim + c] * tw;
          idx += k;
          if (idx >= len) idx -= len;
        }
        data[(base + k * stride) * dim + c] = acc;
      }
    }
  });
}

std::vector<Complex> forward_transform(const Mesh& mesh, std::size_t dim,
                                       std::span<const double> values) {
  const auto shape = packed_shape(mesh);
  const std::size_t d = mesh.dims();
  const auto n_last = static_cast<std::size_t>(mesh.size(d - 1));
  const std::size_t h_last = shape.back();
  const std::size_t lines = mesh.grid_size() / n_last;
  std::vector<Complex> out(mesh.coeff_size() * dim);
  const auto& w = twiddles(static_cast<int>(n_last));
  // Transforming x - x(0) keeps the round-off proportional to the variation
  // of x rather than to its size; the offset goes back into the mean.
  const std::vector<double> offset(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(dim));
  parallel_for(lines, [&](std::size_t p) {
    const double* line = values.data() + p * n_last * dim;
    for (std::size_t k = 0; k < h_last; ++k) {
      for (std::size_t c = 0; c < dim; ++c) {
        Complex acc = 0.0;
        std::size_t idx = 0;
        for (std::size_t m = 0; m < n_last; ++m) {
          acc += (line[m * dim + c] - offset[c]) * w[idx];
          idx += k;
          if (idx >= n_last) idx -= n_last;
        }
        out[(p * h_last + k) * dim + c] = acc;
      }
    }
  });
  for (std::size_t axis = d - 1; axis-- > 0;) transform_axis(out, shape, dim, axis, true);
  for (std::size_t c = 0; c < dim; ++c) out[c] += offset[c] * static_cast<double>(mesh.grid_size());
  return out;
}

std::vector<double> inverse_transform(const Mesh& mesh, std::size_t dim,
                                      std::span<const Complex> coefficients) {
  const auto shape = packed_shape(mesh);
  const std::size_t d = mesh.dims();
  std::vector<Complex> work(coefficients.begin(), coefficients.end());
  // The mean is added after the transform (see forward_transform).
  std::vector<double> mean(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    mean[c] = work[c].real() / static_cast<double>(mesh.grid_size());
    work[c] = {work[c].real() - mean[c] * static_cast<double>(mesh.grid_size()), 0.0};
  }
  for (std::size_t axis = 0; axis + 1 < d; ++axis) transform_axis(work, shape, dim, axis, false);
  const auto n_last = static_cast<std::size_t>(mesh.size(d - 1));
  const std::size_t h_last = shape.back();
  const std::size_t lines = mesh.grid_size() / n_last;
  const double scale = 1.0 / static_cast<double>(mesh.grid_size());
  std::vector<double> out(mesh.grid_size() * dim);
  const auto& w = twiddles(static_cast<int>(n_last));
  parallel_for(lines, [&](std::size_t p) {
    const Complex* spec = work.data() + p * h_last * dim;
    for (std::size_t m = 0; m < n_last; ++m) {
      for (std::size_t c = 0; c < dim; ++c) {
        double acc = spec[c].real();
        std::size_t idx = m;
        for (std::size_t k = 1; k < h_last; ++k) {
          // Re(X_k exp(+i...)) with w = exp(-i...).
          const Complex x = spec[k * dim + c];
          acc += 2.0 * (x.real() * w[idx].real() + x.imag() * w[idx].imag());
          idx += m;
          if (idx >= n_last) idx -= n_last;
        }
        out[(p * n_last + m) * dim + c] = mean[c] + acc * scale;
      }
    }
  });
  return out;
}

}  // namespace

// -------------------------------------------------------- FourierField

FourierField FourierField::from_values(Mesh mesh, std::size_t dim, std::vector<double> values) {
  if (values.size() != mesh.grid_size() * dim) {
    throw std::invalid_argument("grid payload size does not match mesh and dimension");
  }
  FourierField f;
  f.mesh_ = std::move(mesh);
  f.dim_ = dim;
  f.rep_ = Representation::kGrid;
  f.values_ = std::move(values);
  return f;
}

FourierField FourierField::from_coefficients(Mesh mesh, std::size_t dim,
                                             std::vector<Complex> coefficients) {
  if (coefficients.size() != mesh.coeff_size() * dim) {
    throw std::invalid_argument("coefficient payload size does not match mesh and dimension");
  }
  FourierField f;
  f.mesh_ = std::move(mesh);
  f.dim_ = dim;
  f.rep_ = Representation::kCoefficients;
  f.coefficients_ = std::move(coefficients);
  return f;
}

FourierField FourierField::constant(Mesh mesh, std::span<const double> value,
                                    Representation rep) {
  const std::size_t dim = value.size();
  if (rep == Representation::kGrid) {
    std::vector<double> v(mesh.grid_size() * dim);
    for (std::size_t l = 0; l < mesh.grid_size(); ++l) {
      std::copy(value.begin(), value.end(), v.begin() + static_cast<std::ptrdiff_t>(l * dim));
    }
    return from_values(std::move(mesh), dim, std::move(v));
  }
  std::vector<Complex> c(mesh.coeff_size() * dim);
  const auto m = static_cast<double>(mesh.grid_size());
  for (std::size_t i = 0; i < dim; ++i) c[i] = value[i] * m;
  return from_coefficients(std::move(mesh), dim, std::move(c));
}

FourierField FourierField::zeros(Mesh mesh, std::size_t dim, Representation rep) {
  if (rep == Representation::kGrid) {
    const std::size_t size = mesh.grid_size() * dim;
    return from_values(std::move(mesh), dim, std::vector<double>(size));
  }
  const std::size_t size = mesh.coeff_size() * dim;
  return from_coefficients(std::move(mesh), dim, std::vector<Complex>(size));
}

std::span<const double> FourierField::values() const {
  if (rep_ != Representation::kGrid) throw std::logic_error("field holds coefficients, not values");
  return values_;
}

std::span<const Complex> FourierField::coefficients() const {
  if (rep_ != Representation::kCoefficients) {
    throw std::logic_error("field holds values, not coefficients");
  }
  return coefficients_;
}

FourierField FourierField::analyze() const {
  if (rep_ == Representation::kCoefficients) return *this;
  ScopedPhase timer(phase::kFourier);
  return from_coefficients(mesh_, dim_, forward_transform(mesh_, dim_, values_));
}

FourierField FourierField::synthesize() const {
  if (rep_ == Representation::kGrid) return *this;
  ScopedPhase timer(phase::kFourier);
  return from_values(mesh_, dim_, inverse_transform(mesh_, dim_, coefficients_));
}

// ------------------------------------------------------- FourierMatrix

FourierMatrix::FourierMatrix(std::size_t rows, std::size_t cols, FourierField entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.dim() != rows_ * cols_) {
    throw std::invalid_argument("matrix field dimension must equal rows*cols");
  }
}

FourierMatrix FourierMatrix::identity(const Mesh& mesh, std::size_t n, Representation rep) {
  std::vector<double> eye(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
  return {n, n, FourierField::constant(mesh, eye, rep)};
}

// ---------------------------------------------------------- operations

FourierField shift(const FourierField& x, std::span<const double> alpha) {
  const FourierField coeffs = x.analyze();
  const Mesh& mesh = coeffs.mesh();
  if (alpha.size() != mesh.dims()) throw std::invalid_argument("shift vector has wrong length");
  const std::size_t dim = coeffs.dim();
  const auto src = coeffs.coefficients();
  std::vector<Complex> out(src.size());
  // Per-axis phase factors exp(i k alpha_j) for every signed k on the axis.
  std::vector<std::vector<Complex>> axis_phase(mesh.dims());
  for (std::size_t j = 0; j < mesh.dims(); ++j) {
    const int h = mesh.half(j);
    axis_phase[j].resize(static_cast<std::size_t>(2 * h + 1));
    for (int k = -h; k <= h; ++k) {
      axis_phase[j][static_cast<std::size_t>(k + h)] = std::polar(1.0, alpha[j] * k);
    }
  }
  parallel_for(mesh.coeff_size(), [&](std::size_t l) {
    std::array<int, kMaxAngles> kappa{};
    const std::span<int> k(kappa.data(), mesh.dims());
    mesh.packed_index_to_tuple(l, k);
    Complex phase = 1.0;
    for (std::size_t j = 0; j < mesh.dims(); ++j) {
      phase *= axis_phase[j][static_cast<std::size_t>(k[j] + mesh.half(j))];
    }
    for (std::size_t c = 0; c < dim; ++c) out[l * dim + c] = src[l * dim + c] * phase;
  });
  return FourierField::from_coefficients(mesh, dim, std::move(out));
}

FourierMatrix shift(const FourierMatrix& x, std::span<const double> alpha) {
  return {x.rows(), x.cols(), shift(x.field(), alpha)};
}

std::vector<double> average(const FourierField& x) {
  if (x.is_grid()) {
    std::vector<double> mean(x.dim(), 0.0);
    const auto v = x.values();
    for (std::size_t l = 0; l < x.mesh().grid_size(); ++l) {
      for (std::size_t c = 0; c < x.dim(); ++c) mean[c] += v[l * x.dim() + c];
    }
    for (auto& m : mean) m /= static_cast<double>(x.mesh().grid_size());
    return mean;
  }
  std::vector<double> mean(x.dim());
  const auto c = x.coefficients();
  for (std::size_t i = 0; i < x.dim(); ++i) {
    mean[i] = c[i].real() / static_cast<double>(x.mesh().grid_size());
  }
  return mean;
}

std::vector<double> evaluate(const FourierField& x, std::span<const double> theta) {
  const FourierField coeffs = x.analyze();
  const Mesh& mesh = coeffs.mesh();
  if (theta.size() != mesh.dims()) throw std::invalid_argument("point has wrong length");
  const std::size_t dim = coeffs.dim();
  const auto c = coeffs.coefficients();
  std::vector<double> sum(dim, 0.0);
  std::vector<int> kappa(mesh.dims());
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    mesh.packed_index_to_tuple(l, kappa);
    double arg = 0.0;
    for (std::size_t j = 0; j < mesh.dims(); ++j) arg += kappa[j] * theta[j];
    const Complex e = std::polar(1.0, arg);
    const double weight = kappa.back() == 0 ? 1.0 : 2.0;
    for (std::size_t i = 0; i < dim; ++i) sum[i] += weight * (c[l * dim + i] * e).real();
  }
  for (auto& s : sum) s /= static_cast<double>(mesh.grid_size());
  return sum;
}

RealAmplitude real_amplitude(const Complex& coefficient, std::size_t grid_size) {
  const double scale = 2.0 / static_cast<double>(grid_size);
  return {scale * coefficient.real(), -scale * coefficient.imag()};
}

std::vector<double> tail_norm(const FourierField& x) {
  const FourierField coeffs = x.analyze();
  const Mesh& mesh = coeffs.mesh();
  const std::size_t dim = coeffs.dim();
  const auto c = coeffs.coefficients();
  std::vector<double> tail(mesh.dims(), 0.0);
  std::vector<int> kappa(mesh.dims());
  for (std::size_t l = 0; l < mesh.coeff_size(); ++l) {
    mesh.packed_index_to_tuple(l, kappa);
    double norm2 = -1.0;
    for (std::size_t j = 0; j < mesh.dims(); ++j) {
      const int h = mesh.half(j);
      if (h == 0) continue;
      const int a = std::abs(kappa[j]);
      if (a != h && a != std::max(1, h - 1)) continue;
      if (norm2 < 0.0) {
        norm2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
          const auto amp = real_amplitude(c[l * dim + i], mesh.grid_size());
          norm2 += amp.cos_amp * amp.cos_amp + amp.sin_amp * amp.sin_amp;
        }
      }
      tail[j] = std::max(tail[j], std::sqrt(norm2));
    }
  }
  return tail;
}

}  // namespace qptori
