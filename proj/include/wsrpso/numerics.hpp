#pragma once

// Small dense complex kernels. Every routine here is a pure function; sizes in
// this project never exceed a few tens of rows.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "wsrpso/errors.hpp"

namespace wsrpso {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Full SVD, A = U diag(sigma) V^H with sigma non-increasing.
struct SvdFactors {
  ComplexMatrix u;
  RealVector sigma;
  ComplexMatrix v;
};

namespace detail {

inline std::string dims(const ComplexMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

inline void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw ValidationError(std::string(what) + ": expected a non-empty square matrix, got " + dims(a));
}

inline void require_hermitian(const ComplexMatrix& a, const char* what) {
  require_square(a, what);
  const double scale = std::max(1.0, a.norm());
  if ((a - a.adjoint()).norm() > 1e-12 * scale)
    throw ValidationError(std::string(what) + ": matrix is not Hermitian");
}

inline Eigen::LLT<ComplexMatrix> cholesky(const ComplexMatrix& a, const char* what) {
  require_hermitian(a, what);
  Eigen::LLT<ComplexMatrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw SingularityError(std::string(what) + ": matrix " + dims(a) + " is not positive definite");
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double pivot = l(i, i).real();
    if (!(pivot > 0.0) || !std::isfinite(pivot))
      throw SingularityError(std::string(what) + ": non-positive pivot at index " + std::to_string(i));
  }
  return llt;
}

}  // namespace detail

/// Frobenius norm of (A - B), relative to max(1, |B|_F).
inline double relative_residual(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline SvdFactors svd(const ComplexMatrix& a) {
  if (a.size() == 0) throw ValidationError("svd: empty matrix");
  if (!a.allFinite()) throw ValidationError("svd: matrix " + detail::dims(a) + " has non-finite entries");
  Eigen::JacobiSVD<ComplexMatrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success)
    throw NumericalError("svd: no convergence for " + detail::dims(a) + " matrix");
  SvdFactors out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  if (!out.u.allFinite() || !out.v.allFinite() || !out.sigma.allFinite())
    throw NumericalError("svd: non-finite factors for " + detail::dims(a) + " matrix");
  return out;
}

/// Solves A X = B for Hermitian positive definite A.
inline ComplexMatrix hpd_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (b.rows() != a.rows())
    throw ValidationError("hpd_solve: right-hand side has " + std::to_string(b.rows()) +
                          " rows, expected " + std::to_string(a.rows()));
  return detail::cholesky(a, "hpd_solve").solve(b);
}

/// Natural log of det(A) for Hermitian positive definite A, accumulated from
/// the Cholesky diagonal.
inline double logdet_hpd(const ComplexMatrix& a) {
  const auto llt = detail::cholesky(a, "logdet_hpd");
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

/// (A + A^H) / 2. Products like M M^H are only Hermitian up to rounding.
inline ComplexMatrix hermitian_part(const ComplexMatrix& a) {
  return 0.5 * (a + a.adjoint());
}

}  // namespace wsrpso
