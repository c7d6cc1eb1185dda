#pragma once

// Small dense complex Hermitian algebra. Everything downstream is built on
// BasicHermMatrix / BasicHpdMatrix, templated on the real scalar type; the
// rest of the library uses the double-precision aliases.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "haarlab/error.hpp"

namespace haarlab {

template <typename Real>
using CMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVectorT = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using CMatrix = CMatrixT<double>;
using CVector = CVectorT<double>;
using RVector = RVectorT<double>;
using RMatrix = Eigen::MatrixXd;

/// Absolute tolerance for the Hermitian-symmetry check, scaled by max(1, max |a_ij|).
inline constexpr double kHermitianTol = 1e-12;
/// Eigenvalues at or below this fraction of the largest one make a matrix non-HPD.
inline constexpr double kPositiveRelTol = 1e-12;
/// Default relative tolerance for positive-semidefinite order checks.
inline constexpr double kPsdTol = 1e-9;

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Plain = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Plain out = (m + m.adjoint()) * typename Eigen::NumTraits<Scalar>::Real(0.5);
  return out;
}

/// Largest singular value.
template <typename Derived>
auto op_norm(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  if (m.size() == 0) return Real(0);
  Eigen::JacobiSVD<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(m.eval());
  return svd.singularValues()(0);
}

template <typename Real>
class BasicHermMatrix {
 public:
  using Scalar = std::complex<Real>;
  using Matrix = CMatrixT<Real>;

  BasicHermMatrix() = default;

  /// Checked construction; throws NotHermitian when m differs from m* beyond tolerance.
  explicit BasicHermMatrix(Matrix m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols() && m_.rows() >= 1, ErrorCode::ShapeMismatch,
            "Hermitian matrix must be square and non-empty");
    const Real scale = std::max<Real>(Real(1), m_.cwiseAbs().maxCoeff());
    const Real asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    require(std::isfinite(asym) && asym <= Real(kHermitianTol) * scale, ErrorCode::NotHermitian,
            "asymmetry " + std::to_string(static_cast<double>(asym)));
    m_ = hermitian_part(m_);
  }

  /// Takes (m + m*)/2 without checking; for results of Hermitian-preserving arithmetic.
  template <typename Derived>
  static BasicHermMatrix from_hermitian_part(const Eigen::MatrixBase<Derived>& m) {
    BasicHermMatrix h;
    h.m_ = hermitian_part(m);
    return h;
  }

  static BasicHermMatrix identity(Eigen::Index d) { return from_hermitian_part(Matrix::Identity(d, d)); }
  static BasicHermMatrix zero(Eigen::Index d) { return from_hermitian_part(Matrix::Zero(d, d)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

  /// Ascending real eigenvalues.
  RVectorT<Real> eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  friend BasicHermMatrix operator+(const BasicHermMatrix& a, const BasicHermMatrix& b) {
    return from_hermitian_part(a.m_ + b.m_);
  }
  friend BasicHermMatrix operator-(const BasicHermMatrix& a, const BasicHermMatrix& b) {
    return from_hermitian_part(a.m_ - b.m_);
  }
  friend BasicHermMatrix operator*(Real s, const BasicHermMatrix& a) { return from_hermitian_part(s * a.m_); }

 private:
  Matrix m_;
};

/// Hermitian positive-definite matrix with its eigendecomposition cached.
template <typename Real>
class BasicHpdMatrix {
 public:
  using Scalar = std::complex<Real>;
  using Matrix = CMatrixT<Real>;
  using Herm = BasicHermMatrix<Real>;

  BasicHpdMatrix() = default;

  explicit BasicHpdMatrix(const Herm& h) : h_(h) { decompose(); }
  explicit BasicHpdMatrix(const Matrix& m) : h_(m) { decompose(); }

  template <typename Derived>
  static BasicHpdMatrix from_hermitian_part(const Eigen::MatrixBase<Derived>& m) {
    return BasicHpdMatrix(Herm::from_hermitian_part(m));
  }

  static BasicHpdMatrix identity(Eigen::Index d) { return BasicHpdMatrix(Herm::identity(d)); }

  /// Builds Q diag(values) Q* and keeps (Q, values) as the decomposition.
  static BasicHpdMatrix from_eigen(const Matrix& vectors, const RVectorT<Real>& values) {
    BasicHpdMatrix out;
    out.vectors_ = vectors;
    out.values_ = values;
    out.check_positive();
    out.h_ = Herm::from_hermitian_part(vectors * values.asDiagonal() * vectors.adjoint());
    return out;
  }

  Eigen::Index dim() const { return h_.dim(); }
  const Herm& herm() const { return h_; }
  const Matrix& matrix() const { return h_.matrix(); }
  /// Ascending.
  const RVectorT<Real>& eigenvalues() const { return values_; }
  const Matrix& eigenvectors() const { return vectors_; }
  Real min_eigenvalue() const { return values_(0); }
  Real max_eigenvalue() const { return values_(values_.size() - 1); }

  template <typename F>
  Matrix spectral_map(F&& fn) const {
    RVectorT<Real> mapped = values_.unaryExpr(fn);
    return hermitian_part(vectors_ * mapped.asDiagonal() * vectors_.adjoint());
  }

  Matrix sqrt_matrix() const { return spectral_map([](Real x) { return std::sqrt(x); }); }
  Matrix inv_sqrt_matrix() const { return spectral_map([](Real x) { return Real(1) / std::sqrt(x); }); }
  Matrix inverse_matrix() const { return spectral_map([](Real x) { return Real(1) / x; }); }

  /// Solves A x = b through the cached decomposition.
  CVectorT<Real> solve(const CVectorT<Real>& b) const {
    CVectorT<Real> y = vectors_.adjoint() * b;
    y.array() /= values_.array().template cast<Scalar>();
    return vectors_ * y;
  }

 private:
  void decompose() {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h_.matrix());
    require(es.info() == Eigen::Success, ErrorCode::NotPositiveDefinite, "eigensolver failed");
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
    check_positive();
  }

  void check_positive() const {
    const Real top = values_(values_.size() - 1);
    const Real bottom = values_(0);
    require(std::isfinite(top) && std::isfinite(bottom) && top > Real(0) &&
                bottom > Real(kPositiveRelTol) * top,
            ErrorCode::NotPositiveDefinite,
            "eigenvalue range [" + std::to_string(static_cast<double>(bottom)) + ", " +
                std::to_string(static_cast<double>(top)) + "]");
  }

  Herm h_;
  RVectorT<Real> values_;
  Matrix vectors_;
};

using HermMatrix = BasicHermMatrix<double>;
using HpdMatrix = BasicHpdMatrix<double>;

template <typename Real>
BasicHpdMatrix<Real> herm_sqrt(const BasicHpdMatrix<Real>& a) {
  return BasicHpdMatrix<Real>::from_eigen(a.eigenvectors(), a.eigenvalues().cwiseSqrt());
}

template <typename Real>
BasicHpdMatrix<Real> inverse(const BasicHpdMatrix<Real>& a) {
  // Reversed so the eigenvalues stay ascending.
  RVectorT<Real> values = a.eigenvalues().reverse().cwiseInverse();
  CMatrixT<Real> vectors = a.eigenvectors().rowwise().reverse();
  return BasicHpdMatrix<Real>::from_eigen(vectors, values);
}

/// min eigenvalue >= -tol * max(1, max |eigenvalue|).
template <typename Real>
bool is_psd(const BasicHermMatrix<Real>& a, Real tol = Real(kPsdTol)) {
  const RVectorT<Real> ev = a.eigenvalues();
  const Real scale = std::max<Real>(Real(1), ev.cwiseAbs().maxCoeff());
  return ev(0) >= -tol * scale;
}

/// B^{1/2} A B^{1/2}.
template <typename Real>
BasicHermMatrix<Real> congruence(const BasicHermMatrix<Real>& a, const BasicHpdMatrix<Real>& b) {
  require(a.dim() == b.dim(), ErrorCode::ShapeMismatch, "congruence dimensions differ");
  const CMatrixT<Real> root = b.sqrt_matrix();
  return BasicHermMatrix<Real>::from_hermitian_part(root * a.matrix() * root);
}

/// Largest eigenvalue of a Hermitian matrix.
template <typename Real>
Real max_eigenvalue(const BasicHermMatrix<Real>& a) {
  const auto ev = a.eigenvalues();
  return ev(ev.size() - 1);
}

template <typename Real>
Real min_eigenvalue(const BasicHermMatrix<Real>& a) {
  return a.eigenvalues()(0);
}

/// <x, y> = y* x, linear in the first argument.
template <typename DerivedX, typename DerivedY>
auto inner(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  return y.dot(x);
}

/// <A x, x> for Hermitian A; the imaginary residue is dropped.
template <typename Real>
Real quadratic_form(const CMatrixT<Real>& a, const CVectorT<Real>& x) {
  return std::real(x.dot(a * x));
}

}  // namespace haarlab
