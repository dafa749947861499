#pragma once

// Distributed observers. Every right-hand side here sees a follower's own
// output only through differences with its neighbors: the sensor model is
// `relative_outputs`, which produces y_src - y_dst per edge.

#include <vector>

#include "occ/dynamics.hpp"
#include "occ/graph.hpp"

namespace occ {

/// y_from - y_to for every edge of g, in edge order. Leader outputs are
/// y_k = D omega_k.
std::vector<VectorXd> relative_outputs(const Graph& g, const std::vector<VectorXd>& y_followers,
                                       const std::vector<VectorXd>& y_leaders);

struct StateObserverGains {
  std::vector<MatrixXd> F;  // N_i x q
  std::vector<double> mu;
};

/// d xi_i / dt = A_i xi_i + B_i u_i - mu_i F_i (sum over in-edges of
/// w ((y_src - y_i) + yhat_i - yhat_src)), where yhat_src is C_j xi_j for a
/// follower and the broadcast D omega_k for a leader.
std::vector<VectorXd> state_observer_rhs(const Graph& g, const std::vector<FollowerModel>& f,
                                         const StateObserverGains& gains,
                                         const std::vector<VectorXd>& xi,
                                         const std::vector<VectorXd>& u,
                                         const std::vector<VectorXd>& relative,
                                         const std::vector<VectorXd>& leader_broadcast);

/// Per-follower estimate of the adaptive observer; also used for its
/// time derivative.
struct AdaptiveEstimate {
  VectorXd eta_hat;  // qbar
  MatrixXd S;        // qbar x qbar
  MatrixXd D;        // q x qbar

  VectorXd y0() const { return D * eta_hat; }
};

/// What the leaders send to the followers they are connected to.
struct LeaderBroadcast {
  MatrixXd S;
  MatrixXd D;
  std::vector<VectorXd> omega;  // one per leader
};

struct AdaptiveCouplings {
  double beta1 = 3.0;
  double beta2 = 10.0;
  double beta3 = 3.0;
};

std::vector<AdaptiveEstimate> adaptive_observer_rhs(const Graph& g,
                                                    const std::vector<AdaptiveEstimate>& est,
                                                    const LeaderBroadcast& leaders,
                                                    const AdaptiveCouplings& c);

/// d eta_i / dt = S eta_i + beta (sum_j a_ij (eta_j - eta_i) + sum_k d_ik (omega_k - eta_i)).
std::vector<VectorXd> static_observer_rhs(const Graph& g, const std::vector<VectorXd>& eta,
                                          const MatrixXd& S, const std::vector<VectorXd>& omega,
                                          double beta);

/// omega_i* = sum_k w_ik omega_k with w the containment weights.
std::vector<VectorXd> convex_targets(const LaplacianPartition& lap,
                                     const std::vector<VectorXd>& omega);

/// vec(S_tilde)(t) for the stacked per-follower S errors, which obey
/// d/dt [vec S~_1; ...; vec S~_n] = -beta1 (L1 (x) I) [...].
VectorXd s_error_flow(const MatrixXd& L1, double beta1, Eigen::Index qbar, double t,
                      const VectorXd& s_tilde0);

enum class ObserverChannel { Xi = 0, S = 1, D = 2, Eta = 3, Y0 = 4 };
inline constexpr int kObserverChannels = 5;
const char* channel_name(ObserverChannel c);

/// Instantaneous error norms, one entry per follower in each channel.
struct ObserverErrors {
  std::vector<double> xi, S, D, eta, y0;

  const std::vector<double>& channel(ObserverChannel c) const;
  double max() const;
};

ObserverErrors observer_errors(const std::vector<VectorXd>& x, const std::vector<VectorXd>& xi,
                               const std::vector<AdaptiveEstimate>& est,
                               const std::vector<VectorXd>& omega_star, const LeaderModel& leader);

struct ExponentialFit {
  double rate = 0.0;  // v(t) ~ exp(log_amplitude - rate t)
  double log_amplitude = 0.0;
  int points = 0;
  bool valid = false;  // needs two or more points above the floor
};

/// Log-linear least squares over the samples with v > floor.
ExponentialFit fit_exponential(const std::vector<double>& t, const std::vector<double>& v,
                               double floor = 1e-9);

struct ObserverErrorReport {
  std::vector<double> t;
  /// series[channel][follower][k]
  std::vector<std::vector<std::vector<double>>> series;
  std::vector<std::vector<ExponentialFit>> fits;  // [channel][follower]

  /// Largest error over all channels and followers for samples with t >= t0.
  double max_after(double t0) const;
};

ObserverErrorReport observer_error_report(const std::vector<double>& t,
                                          const std::vector<ObserverErrors>& samples,
                                          double floor = 1e-9);

}  // namespace occ
