#pragma once

// Dense helpers shared by every module: Kronecker/vec algebra, Lyapunov
// solves, Hurwitz and PBH tests. Everything is templated on the scalar so
// the kernels can be exercised in long double for reference values.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace occ {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Column-stacking vec(M).
template <typename Derived>
Vec<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& m) {
  Mat<typename Derived::Scalar> tmp = m;
  return Eigen::Map<const Vec<typename Derived::Scalar>>(tmp.data(), tmp.size());
}

/// Inverse of vec for a rows x cols matrix.
template <typename Derived>
Mat<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v,
                                    Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw std::invalid_argument("unvec: size mismatch");
  }
  Vec<typename Derived::Scalar> tmp = v;
  return Eigen::Map<const Mat<typename Derived::Scalar>>(tmp.data(), rows, cols);
}

template <typename A, typename B>
Mat<typename A::Scalar> kron(const Eigen::MatrixBase<A>& a,
                             const Eigen::MatrixBase<B>& b) {
  Mat<typename A::Scalar> lhs = a;
  Mat<typename A::Scalar> rhs = b;
  return Eigen::kroneckerProduct(lhs, rhs).eval();
}

template <typename Derived>
Mat<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return (0.5 * (m + m.transpose())).eval();
}

/// max Re(lambda(A)).
template <typename Derived>
typename Derived::Scalar spectral_abscissa(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() == 0) return -std::numeric_limits<Scalar>::infinity();
  Eigen::EigenSolver<Mat<Scalar>> es(a.eval(), false);
  return es.eigenvalues().real().maxCoeff();
}

template <typename Derived>
bool is_hurwitz(const Eigen::MatrixBase<Derived>& a,
                typename Derived::Scalar margin = 0) {
  return spectral_abscissa(a) < -margin;
}

/// Solves A^T X + X A + Q = 0 through the Kronecker system
/// (I (x) A^T + A^T (x) I) vec(X) = -vec(Q). Intended for n <= ~10.
template <typename DA, typename DQ>
Mat<typename DA::Scalar> solve_lyapunov(const Eigen::MatrixBase<DA>& a,
                                        const Eigen::MatrixBase<DQ>& q) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  const Mat<Scalar> id = Mat<Scalar>::Identity(n, n);
  const Mat<Scalar> at = a.transpose();
  const Mat<Scalar> op = kron(id, at) + kron(at, id);
  Eigen::FullPivLU<Mat<Scalar>> lu(op);
  if (!lu.isInvertible()) {
    throw std::runtime_error("solve_lyapunov: operator singular (A and -A share an eigenvalue)");
  }
  const Vec<Scalar> x = lu.solve(Vec<Scalar>(-vec(q)));
  return symmetrize(unvec(x, n, n));
}

/// Numerical rank by singular values, threshold tol * max(1, sigma_max).
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  if (m.size() == 0) return 0;
  using Scalar = typename Derived::Scalar;
  Eigen::JacobiSVD<Mat<Scalar>> svd(m.eval());
  const auto& s = svd.singularValues();
  const double scale = std::max<double>(1.0, s.size() ? double(std::abs(s(0))) : 0.0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (double(std::abs(s(i))) > tol * scale) ++r;
  }
  return r;
}

template <typename Derived>
bool full_row_rank(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  return numerical_rank(m, tol) == m.rows();
}

/// Hautus test: rank [A - lambda I, B] = n for every eigenvalue with
/// Re(lambda) >= -tol. The caller passes A^T, C^T for detectability.
template <typename DA, typename DB>
bool pbh_stabilizable(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                      double tol = 1e-9) {
  using Scalar = typename DA::Scalar;
  using Complex = std::complex<Scalar>;
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<Mat<Scalar>> es(a.eval(), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex lambda = es.eigenvalues()(k);
    if (lambda.real() < -tol) continue;
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> h(n, n + b.cols());
    h.leftCols(n) = a.template cast<Complex>();
    h.leftCols(n).diagonal().array() -= lambda;
    h.rightCols(b.cols()) = b.template cast<Complex>();
    Eigen::JacobiSVD<decltype(h)> svd(h);
    const auto& s = svd.singularValues();
    const double scale = std::max<double>(1.0, double(s(0)));
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (double(s(i)) > tol * scale) ++r;
    }
    if (r < n) return false;
  }
  return true;
}

template <typename DA, typename DC>
bool pbh_detectable(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DC>& c,
                    double tol = 1e-9) {
  return pbh_stabilizable(a.transpose(), c.transpose(), tol);
}

/// Orthonormal basis split [controllable | uncontrollable] from the SVD of
/// the Krylov matrix [B, AB, ..., A^{n-1}B]. Returns the number of
/// controllable directions; `basis` is orthogonal.
template <typename DA, typename DB>
Eigen::Index controllability_staircase(const Eigen::MatrixBase<DA>& a,
                                       const Eigen::MatrixBase<DB>& b,
                                       Mat<typename DA::Scalar>& basis,
                                       double tol = 1e-9) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index n = a.rows();
  const Eigen::Index p = b.cols();
  Mat<Scalar> krylov(n, n * p);
  Mat<Scalar> block = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    krylov.middleCols(k * p, p) = block;
    block = a * block;
  }
  Eigen::JacobiSVD<Mat<Scalar>> svd(krylov, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  const double scale = std::max<double>(1.0, s.size() ? double(s(0)) : 0.0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (double(s(i)) > tol * scale) ++r;
  }
  basis = svd.matrixU();
  return r;
}

/// Moore-Penrose right inverse C^T (C C^T)^-1 of a full-row-rank matrix.
template <typename Derived>
Mat<typename Derived::Scalar> right_inverse(const Eigen::MatrixBase<Derived>& c) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> cct = c * c.transpose();
  Eigen::LDLT<Mat<Scalar>> ldlt(cct);
  if (ldlt.info() != Eigen::Success || !full_row_rank(c)) {
    throw std::runtime_error("right_inverse: matrix is not full row rank");
  }
  return c.transpose() * ldlt.solve(Mat<Scalar>::Identity(c.rows(), c.rows()));
}

template <typename Derived>
Mat<typename Derived::Scalar> block_diag_impl(const std::vector<Derived>& blocks) {
  using Scalar = typename Derived::Scalar;
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Mat<Scalar> out = Mat<Scalar>::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

inline MatrixXd block_diag(const std::vector<MatrixXd>& blocks) {
  return block_diag_impl(blocks);
}

}  // namespace occ
