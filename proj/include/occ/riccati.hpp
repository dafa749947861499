#pragma once

// Gain synthesis on top of the CARE kernel: observer gains, the augmented
// follower/leader system, the discounted control ARE and its discount bound.

#include <vector>

#include "occ/care.hpp"
#include "occ/dynamics.hpp"

namespace occ {

using CareSolution = CareResult<double>;

struct ObserverGain {
  MatrixXd Phi;  // solves A Phi + Phi A^T + E - Phi C^T R^-1 C Phi = 0
  MatrixXd F;    // Phi C^T R^-1
  double residual = 0.0;
};

ObserverGain observer_synthesis(const FollowerModel& f, const MatrixXd& E, const MatrixXd& R);

/// Residual of the observer ARE at a candidate Phi.
MatrixXd observer_are_residual(const FollowerModel& f, const MatrixXd& E, const MatrixXd& R,
                               const MatrixXd& phi);

/// Lower bound on the coupling gain: 1 / (2 min Re lambda(L1)).
double coupling_bound(const MatrixXd& L1);

struct AugmentedSystem {
  MatrixXd P;        // blockdiag(A_i, S)
  MatrixXd Bbar;     // [B_i; 0]
  MatrixXd Cbarbar;  // [C_i, -D]
  Eigen::Index follower_states = 0;

  Eigen::Index dim() const { return P.rows(); }
  MatrixXd state_cost(const MatrixXd& Q) const { return Cbarbar.transpose() * Q * Cbarbar; }
};

AugmentedSystem augment(const FollowerModel& f, const LeaderModel& l);

struct DiscountedGain {
  CareSolution Psi;
  MatrixXd Kbar;  // -W^-1 Bbar^T Psi, u = Kbar Xbar
  MatrixXd K1() const;
  MatrixXd K2() const;
  Eigen::Index split = 0;
};

/// Discounted ARE solved as the standard CARE of P - (gamma/2) I.
DiscountedGain discounted_are(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W,
                              double gamma, const CareOptions& opts = {});

/// Residual of Psi P + P^T Psi - gamma Psi + Cbb^T Q Cbb - Psi Bbar W^-1 Bbar^T Psi.
MatrixXd discounted_are_residual(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W,
                                 double gamma, const MatrixXd& psi);

/// 2 || (Bbar W^-1 Bbar^T M)^{1/2} ||_2 with M the augmented-state cost,
/// evaluated from eigenvalue magnitudes of the product.
double discount_bound(const MatrixXd& Bbar, const MatrixXd& W, const MatrixXd& state_cost);
double discount_bound(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W);
/// Variant with ||Q||_2 substituted for the output weight.
double discount_bound_scalar(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W);

}  // namespace occ
