#include "qptori/jet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qptori/errors.hpp"

namespace qptori {

std::size_t JetShape::size() const {
  if (symbols <= 1) return static_cast<std::size_t>(symbols == 0 ? 1 : order + 1);
  return order == 0 ? 1 : static_cast<std::size_t>(symbols) + 1;
}

bool JetShape::supported() const {
  if (symbols < 0 || order < 0) return false;
  if (symbols == 0 && order != 0) return false;
  if (symbols > 1 && order > 1) return false;
  return size() <= kJetCapacity;
}

void require_supported(const JetShape& shape) {
  if (!shape.supported()) {
    throw DomainError("unsupported jet shape: " + std::to_string(shape.symbols) + " symbols, order " +
                      std::to_string(shape.order));
  }
}

Jet::Jet(const JetShape& shape, double constant) : shape_(shape), size_(shape.size()) {
  require_supported(shape);
  c_[0] = constant;
  for (std::size_t i = 1; i < size_; ++i) c_[i] = 0.0;
}

Jet Jet::variable(const JetShape& shape, int symbol, double value) {
  Jet j(shape, value);
  if (symbol < 0 || symbol >= shape.symbols) throw DomainError("jet symbol out of range");
  if (shape.order >= 1) j.c_[static_cast<std::size_t>(symbol) + 1] = 1.0;
  return j;
}

Jet Jet::from_coefficients(const JetShape& shape, std::span<const double> coefficients) {
  Jet j(shape);
  if (coefficients.size() != j.size_) throw std::invalid_argument("jet coefficient count mismatch");
  for (std::size_t i = 0; i < j.size_; ++i) j.c_[i] = coefficients[i];
  return j;
}

void Jet::check(const Jet& b) const {
  if (!(shape_ == b.shape_)) throw std::invalid_argument("jet shapes differ");
}

Jet& Jet::operator+=(const Jet& b) {
  check(b);
  for (std::size_t i = 0; i < size_; ++i) c_[i] += b.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& b) {
  check(b);
  for (std::size_t i = 0; i < size_; ++i) c_[i] -= b.c_[i];
  return *this;
}

Jet& Jet::operator*=(double b) {
  for (std::size_t i = 0; i < size_; ++i) c_[i] *= b;
  return *this;
}

Jet& Jet::operator*=(const Jet& b) {
  *this = *this * b;
  return *this;
}

Jet operator-(Jet a) { return a *= -1.0; }
Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator+(Jet a, double b) { return a += b; }
Jet operator+(double a, Jet b) { return b += a; }
Jet operator-(Jet a, double b) { return a -= b; }
Jet operator-(double a, const Jet& b) { return -b + a; }
Jet operator*(Jet a, double b) { return a *= b; }
Jet operator*(double a, Jet b) { return b *= a; }
Jet operator/(Jet a, double b) { return a /= b; }

Jet operator*(const Jet& a, const Jet& b) {
  if (!(a.shape() == b.shape())) throw std::invalid_argument("jet shapes differ");
  Jet r(a);
  const std::size_t n = a.size();
  if (a.shape().symbols == 1) {
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j <= k; ++j) s += a[j] * b[k - j];
      r[k] = s;
    }
  } else {
    r[0] = a[0] * b[0];
    for (std::size_t i = 1; i < n; ++i) r[i] = a[0] * b[i] + a[i] * b[0];
  }
  return r;
}

namespace {

/// f(a0) + f'(a0) (a - a0) for first-order jets.
Jet linear_compose(const Jet& a, double f0, double f1) {
  Jet r(a);
  r[0] = f0;
  for (std::size_t i = 1; i < a.size(); ++i) r[i] = f1 * a[i];
  return r;
}

bool univariate(const Jet& a) { return a.shape().symbols == 1 && a.shape().order > 1; }

}  // namespace

Jet reciprocal(const Jet& a) {
  if (a.constant() == 0.0) throw SingularJetError("reciprocal of a jet with zero constant term");
  const double inv = 1.0 / a.constant();
  if (!univariate(a)) return linear_compose(a, inv, -inv * inv);
  Jet r(a);
  r[0] = inv;
  for (std::size_t k = 1; k < a.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += a[j] * r[k - j];
    r[k] = -s * inv;
  }
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (!(a.shape() == b.shape())) throw std::invalid_argument("jet shapes differ");
  if (b.constant() == 0.0) throw SingularJetError("division by a jet with zero constant term");
  const double inv = 1.0 / b.constant();
  Jet q(a);
  if (!univariate(a)) {
    q[0] = a[0] * inv;
    for (std::size_t i = 1; i < a.size(); ++i) q[i] = (a[i] - q[0] * b[i]) * inv;
    return q;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    double s = a[k];
    for (std::size_t j = 1; j <= k; ++j) s -= b[j] * q[k - j];
    q[k] = s * inv;
  }
  return q;
}

Jet operator/(double a, const Jet& b) { return reciprocal(b) *= a; }

Jet exp(const Jet& a) {
  const double e0 = std::exp(a.constant());
  if (!univariate(a)) return linear_compose(a, e0, e0);
  Jet r(a);
  r[0] = e0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * a[j] * r[k - j];
    r[k] = s / static_cast<double>(k);
  }
  return r;
}

void sincos(const Jet& a, Jet& s, Jet& c) {
  const double s0 = std::sin(a.constant());
  const double c0 = std::cos(a.constant());
  if (!univariate(a)) {
    s = linear_compose(a, s0, c0);
    c = linear_compose(a, c0, -s0);
    return;
  }
  s = a;
  c = a;
  s[0] = s0;
  c[0] = c0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    double ss = 0.0;
    double cc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double ja = static_cast<double>(j) * a[j];
      ss += ja * c[k - j];
      cc += ja * s[k - j];
    }
    s[k] = ss / static_cast<double>(k);
    c[k] = -cc / static_cast<double>(k);
  }
}

Jet sin(const Jet& a) {
  Jet s, c;
  sincos(a, s, c);
  return s;
}

Jet cos(const Jet& a) {
  Jet s, c;
  sincos(a, s, c);
  return c;
}

Jet sqrt(const Jet& a) {
  if (!(a.constant() > 0.0)) throw SingularJetError("square root of a jet with non-positive constant term");
  const double q0 = std::sqrt(a.constant());
  if (!univariate(a)) return linear_compose(a, q0, 0.5 / q0);
  Jet q(a);
  q[0] = q0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    double s = a[k];
    for (std::size_t j = 1; j < k; ++j) s -= q[j] * q[k - j];
    q[k] = s / (2.0 * q0);
  }
  return q;
}

std::size_t monomial_index(const JetShape& shape, std::span<const int> exponents) {
  require_supported(shape);
  if (exponents.size() != static_cast<std::size_t>(shape.symbols)) {
    throw DomainError("exponent vector has wrong length");
  }
  int degree = 0;
  int last = -1;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] < 0) throw DomainError("negative exponent");
    degree += exponents[i];
    if (exponents[i] > 0) last = static_cast<int>(i);
  }
  if (degree > shape.order) throw DomainError("monomial degree exceeds jet order");
  if (degree == 0) return 0;
  if (shape.symbols == 1) return static_cast<std::size_t>(degree);
  return static_cast<std::size_t>(last) + 1;
}

std::vector<double> extract_derivative(const JetVector& v, std::span<const int> exponents) {
  std::vector<double> out(v.size());
  if (v.empty()) return out;
  const std::size_t index = monomial_index(v.front().shape(), exponents);
  double factorial = 1.0;
  for (int e : exponents) {
    for (int k = 2; k <= e; ++k) factorial *= k;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i].shape() == v.front().shape())) throw std::invalid_argument("jet shapes differ");
    out[i] = v[i][index] * factorial;
  }
  return out;
}

}  // namespace qptori
