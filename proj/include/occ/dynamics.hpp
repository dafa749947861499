#pragma once

// Agent models, standing-assumption checks, output regulator equations and
// the closed-loop block matrices of the observer-based protocol.

#include <string>
#include <vector>

#include "occ/graph.hpp"
#include "occ/linalg.hpp"

namespace occ {

struct FollowerModel {
  MatrixXd A;  // N x N
  MatrixXd B;  // N x p
  MatrixXd C;  // q x N

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }
};

struct LeaderModel {
  MatrixXd S;  // qbar x qbar
  MatrixXd D;  // q x qbar

  Eigen::Index states() const { return S.rows(); }
  Eigen::Index outputs() const { return D.rows(); }
};

struct RegulatorSolution {
  MatrixXd Pi;     // N x qbar
  MatrixXd Gamma;  // p x qbar
  double residual = 0.0;
  bool unique = true;
};

struct FollowerAssumptions {
  bool stabilizable = false;
  bool detectable = false;
  bool output_full_row_rank = false;
  bool regulator_solvable = false;
  bool regulator_unique = false;
  double regulator_residual = 0.0;

  bool ok() const {
    return stabilizable && detectable && output_full_row_rank && regulator_solvable;
  }
};

struct LeaderAssumptions {
  bool marginally_stable = false;
  bool output_full_row_rank = false;

  bool ok() const { return marginally_stable && output_full_row_rank; }
};

struct AssumptionReport {
  std::vector<FollowerAssumptions> followers;
  LeaderAssumptions leader;

  bool ok() const;
};

/// Throws ValidationError naming the offending agent on dimension mismatch.
void check_dimensions(const std::vector<FollowerModel>& followers, const LeaderModel& leader);

AssumptionReport check_assumptions(const std::vector<FollowerModel>& followers,
                                   const LeaderModel& leader);

/// All eigenvalues with Re <= tol, imaginary-axis ones semisimple.
bool marginally_stable(const MatrixXd& S, double tol = 1e-9);

/// Minimum-norm least-squares solution of Pi S = A Pi + B Gamma, D = C Pi
/// without the success check; residual and uniqueness are filled in.
RegulatorSolution regulator_least_squares(const FollowerModel& f, const LeaderModel& l);

/// As above, throws SynthesisError when the residual exceeds 1e-8.
RegulatorSolution solve_regulator(const FollowerModel& f, const LeaderModel& l);

/// K2 = Gamma - K1 Pi.
MatrixXd feedforward_gain(const RegulatorSolution& reg, const MatrixXd& K1);

/// || (A + B K1) Pi + B K2 - Pi S ||_F for one follower.
double regulation_identity_residual(const FollowerModel& f, const LeaderModel& l,
                                    const RegulatorSolution& reg, const MatrixXd& K1,
                                    const MatrixXd& K2);

/// Per-follower gains entering the closed loop (static leader observer).
struct LoopGains {
  std::vector<MatrixXd> K1;
  std::vector<MatrixXd> K2;
  std::vector<MatrixXd> F;
  std::vector<double> mu;
  double beta = 1.0;
};

/// x_c = [X; xi; eta], Omega = [omega_{n+1}; ...; omega_{n+m}].
struct ClosedLoop {
  MatrixXd Ac;
  MatrixXd Bc;
  MatrixXd Cc;
  MatrixXd Dc;
};

ClosedLoop closed_loop_matrices(const std::vector<FollowerModel>& followers,
                                const LeaderModel& leader, const Graph& graph,
                                const LoopGains& gains);

struct RegulationReport {
  double state_residual = 0.0;   // ||A_c X_c + B_c - X_c Sbar||
  double output_residual = 0.0;  // ||C_c X_c + D_c||
  /// State residual of the candidate built with C^+ instead of Pi; equal to
  /// state_residual when every C_i is square.
  double right_inverse_state_residual = 0.0;
  bool hurwitz = false;
  bool passed = false;
  MatrixXd Xc;
};

RegulationReport verify_output_regulation(const ClosedLoop& cl, const LeaderModel& leader,
                                          const Graph& graph,
                                          const std::vector<FollowerModel>& followers,
                                          double tol = 1e-6);

}  // namespace occ
