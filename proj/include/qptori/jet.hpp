#ifndef QPTORI_JET_HPP
#define QPTORI_JET_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace qptori {

/// Largest number of coefficients a single jet can hold.
inline constexpr std::size_t kJetCapacity = 32;

/// Number of symbols and truncation order of a jet.
///
/// Two shapes are supported: one symbol with any order (univariate series,
/// coefficient k multiplies sigma^k), and any number of symbols with order
/// at most 1 (value plus gradient, coefficient 1 + i multiplies symbol i).
/// Both are the graded-lexicographic layout restricted to these cases.
struct JetShape {
  int symbols = 0;
  int order = 0;

  std::size_t size() const;
  bool supported() const;
  bool operator==(const JetShape&) const = default;
};

/// Throws DomainError if the shape is unsupported or exceeds kJetCapacity.
void require_supported(const JetShape& shape);

/// Truncated power series with real coefficients.
class Jet {
 public:
  Jet() : shape_{} { c_[0] = 0.0; }
  explicit Jet(const JetShape& shape, double constant = 0.0);
  // Copies touch only the used coefficients.
  Jet(const Jet& other) : shape_(other.shape_), size_(other.size_) {
    std::copy_n(other.c_.begin(), size_, c_.begin());
  }
  Jet& operator=(const Jet& other) {
    shape_ = other.shape_;
    size_ = other.size_;
    std::copy_n(other.c_.begin(), size_, c_.begin());
    return *this;
  }

  /// value + sigma_symbol.
  static Jet variable(const JetShape& shape, int symbol, double value);
  static Jet from_coefficients(const JetShape& shape, std::span<const double> coefficients);

  const JetShape& shape() const { return shape_; }
  std::size_t size() const { return size_; }
  double constant() const { return c_[0]; }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }
  std::span<const double> coefficients() const { return {c_.data(), size_}; }
  std::span<double> coefficients() { return {c_.data(), size_}; }

  Jet& operator+=(const Jet& b);
  Jet& operator-=(const Jet& b);
  Jet& operator*=(const Jet& b);
  Jet& operator+=(double b) { c_[0] += b; return *this; }
  Jet& operator-=(double b) { c_[0] -= b; return *this; }
  Jet& operator*=(double b);
  Jet& operator/=(double b) { return *this *= 1.0 / b; }

 private:
  void check(const Jet& b) const;

  JetShape shape_;
  std::size_t size_ = 1;
  std::array<double, kJetCapacity> c_;
};

Jet operator-(Jet a);
Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator+(Jet a, double b);
Jet operator+(double a, Jet b);
Jet operator-(Jet a, double b);
Jet operator-(double a, const Jet& b);
Jet operator*(Jet a, double b);
Jet operator*(double a, Jet b);
Jet operator/(Jet a, double b);
Jet operator/(double a, const Jet& b);

Jet exp(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
void sincos(const Jet& a, Jet& s, Jet& c);
/// Throws SingularJetError when the constant term is zero.
Jet reciprocal(const Jet& a);
/// Throws SingularJetError when the constant term is not positive.
Jet sqrt(const Jet& a);

using JetVector = std::vector<Jet>;

/// Position of a monomial (exponent per symbol) in the coefficient array.
/// Throws DomainError when the degree exceeds the order.
std::size_t monomial_index(const JetShape& shape, std::span<const int> exponents);

/// Partial derivative d^|e| / d sigma^e at sigma = 0 of every component,
/// i.e. the stored coefficient times prod(e_i!).
std::vector<double> extract_derivative(const JetVector& v, std::span<const int> exponents);

}  // namespace qptori

#endif  // QPTORI_JET_HPP
