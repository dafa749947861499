#include "occ/dynamics.hpp"

#include <complex>
#include <sstream>

#include "occ/errors.hpp"

namespace occ {

namespace {

std::string shape(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool AssumptionReport::ok() const {
  if (!leader.ok()) return false;
  for (const auto& f : followers) {
    if (!f.ok()) return false;
  }
  return true;
}

void check_dimensions(const std::vector<FollowerModel>& followers, const LeaderModel& leader) {
  if (leader.S.rows() == 0 || leader.S.rows() != leader.S.cols()) {
    throw ValidationError("leader: S must be square and non-empty, got " + shape(leader.S));
  }
  if (leader.D.cols() != leader.S.rows() || leader.D.rows() == 0) {
    throw ValidationError("leader: D must have " + std::to_string(leader.S.rows()) +
                          " columns, got " + shape(leader.D));
  }
  const Eigen::Index q = leader.D.rows();
  for (std::size_t i = 0; i < followers.size(); ++i) {
    const auto& f = followers[i];
    const std::string who = "follower " + std::to_string(i + 1) + ": ";
    if (f.A.rows() == 0 || f.A.rows() != f.A.cols()) {
      throw ValidationError(who + "A must be square and non-empty, got " + shape(f.A));
    }
    if (f.B.rows() != f.A.rows() || f.B.cols() == 0) {
      throw ValidationError(who + "B must have " + std::to_string(f.A.rows()) + " rows, got " +
                            shape(f.B));
    }
    if (f.C.cols() != f.A.rows()) {
      throw ValidationError(who + "C must have " + std::to_string(f.A.rows()) +
                            " columns, got " + shape(f.C));
    }
    if (f.C.rows() != q) {
      throw ValidationError(who + "C has " + std::to_string(f.C.rows()) +
                            " rows, expected q = " + std::to_string(q));
    }
  }
}

bool marginally_stable(const MatrixXd& S, double tol) {
  using Complex = std::complex<double>;
  const Eigen::Index n = S.rows();
  Eigen::EigenSolver<MatrixXd> es(S, false);
  const Eigen::VectorXcd lambda = es.eigenvalues();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lambda(k).real() > tol) return false;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(lambda(k).real()) > tol) continue;
    // Numerically split copies of a defective eigenvalue land within ~sqrt(eps).
    Eigen::Index algebraic = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(lambda(j) - lambda(k)) < 1e-6) ++algebraic;
    }
    Eigen::MatrixXcd shifted = S.cast<Complex>();
    shifted.diagonal().array() -= lambda(k);
    const Eigen::Index geometric = n - numerical_rank(shifted, tol);
    if (geometric < algebraic) return false;
  }
  return true;
}

RegulatorSolution regulator_least_squares(const FollowerModel& f, const LeaderModel& l) {
  const Eigen::Index n = f.states();
  const Eigen::Index p = f.inputs();
  const Eigen::Index q = f.outputs();
  const Eigen::Index r = l.states();
  const MatrixXd ir = MatrixXd::Identity(r, r);
  const MatrixXd in = MatrixXd::Identity(n, n);

  // vec(Pi S - A Pi - B Gamma) = (S^T (x) I - I (x) A) vec Pi - (I (x) B) vec Gamma
  // vec(C Pi)                  = (I (x) C) vec Pi
  MatrixXd m = MatrixXd::Zero(n * r + q * r, n * r + p * r);
  m.topLeftCorner(n * r, n * r) = kron(l.S.transpose(), in) - kron(ir, f.A);
  m.topRightCorner(n * r, p * r) = -kron(ir, f.B);
  m.bottomLeftCorner(q * r, n * r) = kron(ir, f.C);
  VectorXd rhs = VectorXd::Zero(n * r + q * r);
  rhs.tail(q * r) = vec(l.D);

  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(m);
  cod.setThreshold(1e-10);
  const VectorXd z = cod.solve(rhs);

  RegulatorSolution sol;
  sol.Pi = unvec(z.head(n * r), n, r);
  sol.Gamma = unvec(z.tail(p * r), p, r);
  sol.unique = cod.rank() == m.cols();
  const double sylvester = (sol.Pi * l.S - f.A * sol.Pi - f.B * sol.Gamma).norm();
  const double output = (l.D - f.C * sol.Pi).norm();
  sol.residual = std::max(sylvester, output);
  return sol;
}

RegulatorSolution solve_regulator(const FollowerModel& f, const LeaderModel& l) {
  RegulatorSolution sol = regulator_least_squares(f, l);
  if (sol.residual > 1e-8) {
    std::ostringstream msg;
    msg << "regulator equations unsolvable (residual " << sol.residual << ")";
    throw SynthesisError(msg.str());
  }
  return sol;
}

AssumptionReport check_assumptions(const std::vector<FollowerModel>& followers,
                                   const LeaderModel& leader) {
  check_dimensions(followers, leader);
  AssumptionReport report;
  report.leader.marginally_stable = marginally_stable(leader.S);
  report.leader.output_full_row_rank = full_row_rank(leader.D);
  for (const auto& f : followers) {
    FollowerAssumptions a;
    a.stabilizable = pbh_stabilizable(f.A, f.B);
    a.detectable = pbh_detectable(f.A, f.C);
    a.output_full_row_rank = full_row_rank(f.C);
    const RegulatorSolution reg = regulator_least_squares(f, leader);
    a.regulator_residual = reg.residual;
    a.regulator_solvable = reg.residual <= 1e-8;
    a.regulator_unique = reg.unique;
    report.followers.push_back(a);
  }
  return report;
}

MatrixXd feedforward_gain(const RegulatorSolution& reg, const MatrixXd& K1) {
  if (K1.cols() != reg.Pi.rows() || K1.rows() != reg.Gamma.rows()) {
    throw ValidationError("feedforward_gain: K1 is " + shape(K1) + ", expected " +
                          std::to_string(reg.Gamma.rows()) + "x" + std::to_string(reg.Pi.rows()));
  }
  return reg.Gamma - K1 * reg.Pi;
}

double regulation_identity_residual(const FollowerModel& f, const LeaderModel& l,
                                    const RegulatorSolution& reg, const MatrixXd& K1,
                                    const MatrixXd& K2) {
  return ((f.A + f.B * K1) * reg.Pi + f.B * K2 - reg.Pi * l.S).norm();
}

ClosedLoop closed_loop_matrices(const std::vector<FollowerModel>& followers,
                                const LeaderModel& leader, const Graph& graph,
                                const LoopGains& gains) {
  check_dimensions(followers, leader);
  const std::size_t n = followers.size();
  if (static_cast<int>(n) != graph.n_followers || gains.K1.size() != n || gains.K2.size() != n ||
      gains.F.size() != n || gains.mu.size() != n) {
    throw ValidationError("closed_loop_matrices: follower count mismatch");
  }
  const Eigen::Index q = leader.outputs();
  const Eigen::Index r = leader.states();
  const Eigen::Index m = graph.m_leaders;
  std::vector<MatrixXd> a, b, c, k1, k2, muf;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(followers[i].A);
    b.push_back(followers[i].B);
    c.push_back(followers[i].C);
    k1.push_back(gains.K1[i]);
    k2.push_back(gains.K2[i]);
    muf.push_back(gains.mu[i] * gains.F[i]);
  }
  const MatrixXd A = block_diag(a), Bb = block_diag(b), Cb = block_diag(c);
  const MatrixXd K1 = block_diag(k1), K2 = block_diag(k2), muF = block_diag(muf);
  const Eigen::Index N = A.rows();
  const Eigen::Index nr = static_cast<Eigen::Index>(n) * r;

  const LaplacianPartition lap = laplacian_partition(graph);
  const MatrixXd coupling = muF * kron(lap.L1, MatrixXd::Identity(q, q)) * Cb;

  ClosedLoop cl;
  cl.Ac = MatrixXd::Zero(2 * N + nr, 2 * N + nr);
  cl.Ac.block(0, 0, N, N) = A;
  cl.Ac.block(0, N, N, N) = Bb * K1;
  cl.Ac.block(0, 2 * N, N, nr) = Bb * K2;
  cl.Ac.block(N, 0, N, N) = coupling;
  cl.Ac.block(N, N, N, N) = A + Bb * K1 - coupling;
  cl.Ac.block(N, 2 * N, N, nr) = Bb * K2;
  cl.Ac.block(2 * N, 2 * N, nr, nr) =
      kron(MatrixXd::Identity(n, n), leader.S) - gains.beta * kron(lap.L1, MatrixXd::Identity(r, r));

  cl.Bc = MatrixXd::Zero(2 * N + nr, m * r);
  cl.Bc.bottomRows(nr) = -gains.beta * kron(lap.L2, MatrixXd::Identity(r, r));

  cl.Cc = MatrixXd::Zero(static_cast<Eigen::Index>(n) * q, 2 * N + nr);
  cl.Cc.leftCols(N) = kron(lap.L1, MatrixXd::Identity(q, q)) * Cb;
  cl.Dc = kron(lap.L2, leader.D);
  return cl;
}

RegulationReport verify_output_regulation(const ClosedLoop& cl, const LeaderModel& leader,
                                          const Graph& graph,
                                          const std::vector<FollowerModel>& followers,
                                          double tol) {
  const std::size_t n = followers.size();
  const Eigen::Index r = leader.states();
  const Eigen::Index m = graph.m_leaders;
  const LaplacianPartition lap = laplacian_partition(graph);
  const MatrixXd l1inv_l2 = -lap.containment_weights;  // L1^{-1} L2

  std::vector<MatrixXd> pis, cs;
  bool all_square = true;
  for (const auto& f : followers) {
    pis.push_back(solve_regulator(f, leader).Pi);
    cs.push_back(f.C);
    all_square = all_square && f.C.rows() == f.C.cols() && full_row_rank(f.C);
  }
  const MatrixXd Pi = block_diag(pis);
  const MatrixXd Cb = block_diag(cs);
  const Eigen::Index N = Pi.rows();
  const Eigen::Index nr = static_cast<Eigen::Index>(n) * r;

  const MatrixXd bottom = -kron(l1inv_l2, MatrixXd::Identity(r, r));
  const MatrixXd via_inverse = -right_inverse(Cb) * kron(l1inv_l2, leader.D);
  // With square C the two candidates coincide; otherwise only Pi-based works.
  const MatrixXd top = all_square ? via_inverse : MatrixXd(Pi * bottom);

  const MatrixXd sbar = kron(MatrixXd::Identity(m, m), leader.S);
  auto assemble = [&](const MatrixXd& upper) {
    MatrixXd xc(2 * N + nr, m * r);
    xc << upper, upper, bottom;
    return xc;
  };

  RegulationReport rep;
  rep.Xc = assemble(top);
  rep.state_residual = (cl.Ac * rep.Xc + cl.Bc - rep.Xc * sbar).norm();
  rep.output_residual = (cl.Cc * rep.Xc + cl.Dc).norm();
  const MatrixXd xc_pinv = assemble(via_inverse);
  rep.right_inverse_state_residual = (cl.Ac * xc_pinv + cl.Bc - xc_pinv * sbar).norm();
  rep.hurwitz = is_hurwitz(cl.Ac);
  rep.passed = rep.state_residual <= tol && rep.output_residual <= tol;
  return rep;
}

}  // namespace occ
