#pragma once

// Continuous-time algebraic Riccati equation
//   A^T X + X A + Q - X B R^{-1} B^T X = 0
// by Newton-Kleinman iteration. The initial stabilizing gain comes from a
// Bass-type design on the controllable part of (A, B); uncontrollable modes
// must already be stable.

#include <cmath>
#include <sstream>
#include <vector>

#include "occ/errors.hpp"
#include "occ/linalg.hpp"

namespace occ {

struct CareOptions {
  double tolerance = 1e-9;
  int max_iterations = 100;
  bool keep_history = false;
};

template <typename Scalar>
struct CareResult {
  Mat<Scalar> X;
  Mat<Scalar> K;  // R^{-1} B^T X, so the optimal input is u = -K x
  double residual = 0.0;
  int iterations = 0;
  std::vector<Mat<Scalar>> history;  // X_0, X_1, ... when keep_history
};

template <typename DA, typename DQ, typename DB, typename DR>
Mat<typename DA::Scalar> care_residual(const Eigen::MatrixBase<DA>& a,
                                       const Eigen::MatrixBase<DQ>& q,
                                       const Eigen::MatrixBase<DB>& b,
                                       const Eigen::MatrixBase<DR>& r,
                                       const Mat<typename DA::Scalar>& x) {
  using Scalar = typename DA::Scalar;
  const Mat<Scalar> rinv_bt = r.ldlt().solve(b.transpose().eval());
  return a.transpose() * x + x * a + q - x * b * rinv_bt * x;
}

/// Gain K with A - B K Hurwitz. Throws SynthesisError if (A, B) is not
/// stabilizable.
template <typename DA, typename DB>
Mat<typename DA::Scalar> stabilizing_gain(const Eigen::MatrixBase<DA>& a,
                                          const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index n = a.rows();
  const Eigen::Index p = b.cols();
  if (is_hurwitz(a)) return Mat<Scalar>::Zero(p, n);

  Mat<Scalar> basis;
  const Eigen::Index nc = controllability_staircase(a, b, basis);
  const Mat<Scalar> at = basis.transpose() * a * basis;
  const Mat<Scalar> bt = basis.transpose() * b;
  if (nc < n && !is_hurwitz(at.bottomRightCorner(n - nc, n - nc).eval())) {
    throw SynthesisError("pair (A, B) is not stabilizable");
  }
  const Mat<Scalar> acc = at.topLeftCorner(nc, nc);
  const Mat<Scalar> bc = bt.topRows(nc);

  // Bass: with beta > max |Re lambda(Acc)|, -(Acc + beta I) is Hurwitz and
  // Z = int exp(-(Acc+beta I)t) Bc Bc^T exp(-(Acc+beta I)^T t) dt > 0 solves
  // (Acc + beta I) Z + Z (Acc + beta I)^T = Bc Bc^T; K = Bc^T Z^{-1}
  // places every closed-loop eigenvalue left of -beta.
  const Scalar beta = acc.cwiseAbs().rowwise().sum().maxCoeff() + Scalar(1);
  const Mat<Scalar> shifted = acc + beta * Mat<Scalar>::Identity(nc, nc);
  const Mat<Scalar> z = solve_lyapunov((-shifted.transpose()).eval(), (bc * bc.transpose()).eval());
  const Mat<Scalar> kc = bc.transpose() * z.ldlt().solve(Mat<Scalar>::Identity(nc, nc));

  Mat<Scalar> k_t = Mat<Scalar>::Zero(p, n);
  k_t.leftCols(nc) = kc;
  const Mat<Scalar> k = k_t * basis.transpose();
  if (!is_hurwitz((a - b * k).eval())) {
    throw SynthesisError("failed to construct an initial stabilizing gain");
  }
  return k;
}

/// Stabilizing solution of the CARE. `k0`, when non-empty, must stabilize
/// A - B k0 and seeds the iteration.
template <typename DA, typename DQ, typename DB, typename DR>
CareResult<typename DA::Scalar> solve_care(const Eigen::MatrixBase<DA>& a,
                                           const Eigen::MatrixBase<DQ>& q,
                                           const Eigen::MatrixBase<DB>& b,
                                           const Eigen::MatrixBase<DR>& r,
                                           const CareOptions& opts = {},
                                           const Mat<typename DA::Scalar>& k0 = {}) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index n = a.rows();
  const Eigen::Index p = b.cols();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != p ||
      r.cols() != p) {
    throw std::invalid_argument("solve_care: dimension mismatch");
  }
  Eigen::LLT<Mat<Scalar>> r_llt(r.eval());
  if (r_llt.info() != Eigen::Success) throw SynthesisError("R must be positive definite");
  const Mat<Scalar> rinv_bt = r_llt.solve(b.transpose().eval());
  const Mat<Scalar> qs = symmetrize(q);

  // Imaginary-axis eigenvalues of the Hamiltonian rule out a stabilizing X.
  {
    Mat<Scalar> h(2 * n, 2 * n);
    h << a, -(b * rinv_bt), -qs, -a.transpose();
    Eigen::EigenSolver<Mat<Scalar>> es(h, false);
    const double scale = std::max<double>(1.0, double(h.norm()));
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      if (std::abs(double(es.eigenvalues()(i).real())) < 1e-9 * scale) {
        throw SynthesisError("Hamiltonian has eigenvalues on the imaginary axis; no stabilizing solution");
      }
    }
  }

  Mat<Scalar> k = k0.size() ? k0 : stabilizing_gain(a, b);
  if (!is_hurwitz((a - b * k).eval())) {
    throw SynthesisError("initial gain does not stabilize A - B K");
  }

  CareResult<Scalar> out;
  Mat<Scalar> x_prev;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Mat<Scalar> acl = a - b * k;
    const Mat<Scalar> x = solve_lyapunov(acl, (qs + k.transpose() * r * k).eval());
    if (opts.keep_history) out.history.push_back(x);
    k = rinv_bt * x;
    out.X = x;
    out.iterations = it;
    out.residual = double(care_residual(a, qs, b, r, x).norm());
    const bool small_step =
        x_prev.size() && double((x - x_prev).norm()) <= 1e-13 * std::max<double>(1.0, double(x.norm()));
    // Iterate past the tolerance to the rounding floor; Newton is quadratic
    // there, so this costs one or two extra steps.
    if (out.residual <= 1e-4 * opts.tolerance || small_step) break;
    x_prev = x;
  }
  out.K = k;
  if (out.residual > opts.tolerance) {
    // Newton has stalled at the rounding floor; accept it only when that
    // floor is relative-small, otherwise report divergence.
    if (out.residual > opts.tolerance * std::max<double>(1.0, double(out.X.norm()))) {
      std::ostringstream msg;
      msg << "Newton-Kleinman did not converge after " << out.iterations
          << " iterations, residual " << out.residual;
      throw SynthesisError(msg.str());
    }
  }
  return out;
}

}  // namespace occ
