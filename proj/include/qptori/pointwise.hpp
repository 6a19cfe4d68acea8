#ifndef QPTORI_POINTWISE_HPP
#define QPTORI_POINTWISE_HPP

#include <Eigen/Dense>

#include "qptori/fourier.hpp"

namespace qptori {

// Grid-wise algebra. Inputs in either representation; outputs are grid values.

/// theta -> A(theta) x(theta).
FourierField multiply(const FourierMatrix& A, const FourierField& x);
/// theta -> A(theta) B(theta).
FourierMatrix multiply(const FourierMatrix& A, const FourierMatrix& B);
/// theta -> A(theta) - M.
FourierMatrix subtract_constant(const FourierMatrix& A, const Eigen::MatrixXd& M);
/// theta -> A(theta)^{-1}. Throws DomainError on a singular point.
FourierMatrix invert(const FourierMatrix& A);
/// theta -> a x(theta) + b y(theta).
FourierField combine(double a, const FourierField& x, double b, const FourierField& y);
FourierMatrix combine(double a, const FourierMatrix& x, double b, const FourierMatrix& y);

/// Largest Euclidean norm of x(theta) over the mesh.
double max_norm(const FourierField& x);
/// Largest Frobenius norm of A(theta) over the mesh.
double max_norm(const FourierMatrix& A);

/// Matrix at a grid point (column-major payload).
Eigen::MatrixXd matrix_at(const FourierMatrix& grid, std::size_t point);

}  // namespace qptori

#endif  // QPTORI_POINTWISE_HPP
