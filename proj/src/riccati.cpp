#include "occ/riccati.hpp"

#include <cmath>

#include "occ/errors.hpp"

namespace occ {

ObserverGain observer_synthesis(const FollowerModel& f, const MatrixXd& E, const MatrixXd& R) {
  const Eigen::Index n = f.states();
  const Eigen::Index q = f.outputs();
  if (E.rows() != n || E.cols() != n || R.rows() != q || R.cols() != q) {
    throw ValidationError("observer_synthesis: E must be " + std::to_string(n) + "x" +
                          std::to_string(n) + " and R " + std::to_string(q) + "x" +
                          std::to_string(q));
  }
  if (!pbh_detectable(f.A, f.C)) throw SynthesisError("pair (A, C) is not detectable");
  const MatrixXd at = f.A.transpose();
  const MatrixXd ct = f.C.transpose();
  const CareSolution dual = solve_care(at, E, ct, R);
  ObserverGain out;
  out.Phi = dual.X;
  out.F = dual.K.transpose();  // (R^-1 C Phi)^T = Phi C^T R^-1
  out.residual = observer_are_residual(f, E, R, out.Phi).norm();
  return out;
}

MatrixXd observer_are_residual(const FollowerModel& f, const MatrixXd& E, const MatrixXd& R,
                               const MatrixXd& phi) {
  const MatrixXd rinv_c = R.ldlt().solve(f.C);
  return f.A * phi + phi * f.A.transpose() + E - phi * f.C.transpose() * rinv_c * phi;
}

double coupling_bound(const MatrixXd& L1) {
  Eigen::EigenSolver<MatrixXd> es(L1, false);
  const double min_re = es.eigenvalues().real().minCoeff();
  if (!(min_re > 1e-9)) {
    throw ValidationError("L1 has an eigenvalue with nonpositive real part");
  }
  return 1.0 / (2.0 * min_re);
}

AugmentedSystem augment(const FollowerModel& f, const LeaderModel& l) {
  const Eigen::Index n = f.states();
  const Eigen::Index r = l.states();
  if (f.outputs() != l.outputs()) {
    throw ValidationError("augment: follower and leader output dimensions differ");
  }
  AugmentedSystem aug;
  aug.follower_states = n;
  aug.P = MatrixXd::Zero(n + r, n + r);
  aug.P.topLeftCorner(n, n) = f.A;
  aug.P.bottomRightCorner(r, r) = l.S;
  aug.Bbar = MatrixXd::Zero(n + r, f.inputs());
  aug.Bbar.topRows(n) = f.B;
  aug.Cbarbar.resize(f.outputs(), n + r);
  aug.Cbarbar << f.C, -l.D;
  return aug;
}

MatrixXd DiscountedGain::K1() const { return Kbar.leftCols(split); }
MatrixXd DiscountedGain::K2() const { return Kbar.rightCols(Kbar.cols() - split); }

DiscountedGain discounted_are(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W,
                              double gamma, const CareOptions& opts) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("discount factor must be positive");
  }
  const Eigen::Index d = aug.dim();
  const MatrixXd shifted = aug.P - 0.5 * gamma * MatrixXd::Identity(d, d);
  if (!pbh_stabilizable(shifted, aug.Bbar)) {
    throw SynthesisError("shifted pair (P - gamma/2 I, Bbar) is not stabilizable");
  }
  const MatrixXd cost = aug.state_cost(Q);
  DiscountedGain out;
  out.Psi = solve_care(shifted, cost, aug.Bbar, W, opts);
  out.Kbar = -out.Psi.K;
  out.split = aug.follower_states;
  return out;
}

MatrixXd discounted_are_residual(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W,
                                 double gamma, const MatrixXd& psi) {
  const MatrixXd winv_bt = W.ldlt().solve(aug.Bbar.transpose());
  return psi * aug.P + aug.P.transpose() * psi - gamma * psi + aug.state_cost(Q) -
         psi * aug.Bbar * winv_bt * psi;
}

double discount_bound(const MatrixXd& Bbar, const MatrixXd& W, const MatrixXd& state_cost) {
  const MatrixXd g = Bbar * W.ldlt().solve(Bbar.transpose());
  // G M is similar to G^{1/2} M G^{1/2} >= 0, so its spectrum is real and
  // nonnegative up to rounding.
  Eigen::EigenSolver<MatrixXd> es(g * state_cost, false);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  return 2.0 * std::sqrt(rho);
}

double discount_bound(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W) {
  return discount_bound(aug.Bbar, W, aug.state_cost(Q));
}

double discount_bound_scalar(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W) {
  const MatrixXd g = aug.Bbar * W.ldlt().solve(aug.Bbar.transpose());
  Eigen::JacobiSVD<MatrixXd> sg(g), sq(Q);
  return 2.0 * std::sqrt(sg.singularValues()(0) * sq.singularValues()(0));
}

}  // namespace occ
