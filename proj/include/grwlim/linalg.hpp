#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "grwlim/errors.hpp"

namespace grwlim {

template <typename Real>
using Complex = std::complex<Real>;
template <typename Real>
using CVector = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using CMatrix = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// |v><v| for any vector expression.
template <typename Derived>
auto projector(const Eigen::MatrixBase<Derived>& v) {
  return (v * v.adjoint()).eval();
}

/// Largest absolute entry, 0 for an empty matrix.
template <typename Derived>
typename Derived::RealScalar max_abs(const Eigen::MatrixBase<Derived>& a) {
  return a.size() == 0 ? typename Derived::RealScalar(0) : a.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& a, typename Derived::RealScalar tol) {
  if (a.rows() != a.cols()) return false;
  return max_abs((a - a.adjoint()).eval()) <= tol;
}

/// Diagonal part in the standard basis: off-diagonal entries set to zero.
template <typename Derived>
typename Derived::PlainObject standard_diag_part(const Eigen::MatrixBase<Derived>& a) {
  typename Derived::PlainObject out = Derived::PlainObject::Zero(a.rows(), a.cols());
  out.diagonal() = a.diagonal();
  return out;
}

/// <u|A|v> for vector expressions.
template <typename U, typename M, typename V>
typename M::Scalar sandwich(const Eigen::MatrixBase<U>& u, const Eigen::MatrixBase<M>& a,
                            const Eigen::MatrixBase<V>& v) {
  return u.dot(a * v);
}

/// Unitary discrete Fourier matrix F_{jk} = exp(2 pi i jk/n)/sqrt(n).
template <typename Real>
CMatrix<Real> fourier_matrix(Eigen::Index n) {
  CMatrix<Real> f(n, n);
  const Real pi = static_cast<Real>(3.14159265358979323846264338327950288L);
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      // Reduce jk mod n first so the phase stays accurate for large n.
      const Real angle = Real(2) * pi * static_cast<Real>((j * k) % n) / static_cast<Real>(n);
      f(j, k) = std::polar(scale, angle);
    }
  }
  return f;
}

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(Errc::dimension_mismatch, std::string(what) + ": dimension " + std::to_string(a) +
                                              " does not match " + std::to_string(b));
  }
}

}  // namespace grwlim
