#pragma once

// Off-policy actor-critic policy iteration on quadratic/linear bases.
//
// Value x^T Psi x is represented by critic weights over the degree-two
// monomials of x = (xi_i, eta_hat_i); the policy u = K x by actor weights
// W_a = K^T. One data interval [t0, t0 + T] is summarised by its endpoint
// states and three discounted integrals, so every iteration can re-form its
// regression row for a new target policy from the same data.

#include <cstdint>
#include <string>
#include <vector>

#include "occ/linalg.hpp"
#include "occ/riccati.hpp"

namespace occ {

/// Number of degree-two monomials in d variables.
inline Eigen::Index critic_size(Eigen::Index d) { return d * (d + 1) / 2; }

/// (x1^2, x1 x2, ..., x1 xd, x2^2, ..., xd^2).
VectorXd critic_basis(const VectorXd& x);

/// Symmetric Psi with w . critic_basis(x) = x^T Psi x.
MatrixXd weights_to_matrix(const VectorXd& w);
VectorXd matrix_to_weights(const MatrixXd& psi);

/// Raw data of one interval; integrals carry the weight exp(-gamma (s - t0)).
struct IntervalRecord {
  double T = 0.0;
  VectorXd x_start;
  VectorXd x_end;
  double cost = 0.0;  // int e z^T Q z, z = yhat - y0
  MatrixXd xx;        // int e x x^T
  MatrixXd xu;        // int e x u^T
};

/// Running accumulators for one interval, integrated alongside the plant.
struct IntervalAccumulator {
  static Eigen::Index size(Eigen::Index d, Eigen::Index p) { return 1 + d * d + d * p; }

  /// Writes the accumulator time derivative at time tau after the interval start.
  static void rhs(double gamma, double tau, const VectorXd& x, const VectorXd& u,
                  const VectorXd& z, const MatrixXd& Q, Eigen::Ref<VectorXd> out);
  static IntervalRecord unpack(const Eigen::Ref<const VectorXd>& acc, Eigen::Index d,
                               Eigen::Index p, double T, const VectorXd& x_start,
                               const VectorXd& x_end);
};

struct RegressionRow {
  double y = 0.0;
  VectorXd xi;  // critic part then actor columns j = 1..p
};

/// Row of the data-driven Bellman equation for target policy K (p x d).
RegressionRow sample_row(const IntervalRecord& rec, const MatrixXd& K, const MatrixXd& W,
                         double gamma);

struct SampleBatch {
  std::vector<RegressionRow> rows;
  Eigen::Index d = 0;  // augmented dimension
  Eigen::Index p = 0;  // inputs
  double T = 0.0;
  double gamma = 0.0;

  Eigen::Index unknowns() const { return critic_size(d) + p * d; }
};

SampleBatch build_batch(const std::vector<IntervalRecord>& records, const MatrixXd& K,
                        const MatrixXd& W, double gamma);

struct LeastSquaresOptions {
  double max_condition = 1e8;
  double rank_tolerance = 1e-10;
};

struct LeastSquaresUpdate {
  VectorXd critic;  // w_c
  MatrixXd actor;   // W_a, d x p
  double condition = 0.0;
  double residual = 0.0;

  MatrixXd psi() const { return weights_to_matrix(critic); }
  MatrixXd gain() const { return actor.transpose(); }
};

/// Orthogonal-factorization solve of the stacked regression. Throws
/// std::invalid_argument when the batch is too small and SynthesisError on
/// insufficient excitation.
LeastSquaresUpdate least_squares_update(const SampleBatch& batch, const LeastSquaresOptions& opts = {});

/// Psi of policy K on the shifted augmented system:
/// Psi (P + Bbar K) + (P + Bbar K)^T Psi - gamma Psi + Cbb^T Q Cbb + K^T W K = 0.
MatrixXd policy_evaluation(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W,
                           double gamma, const MatrixXd& K);

struct PolicyIterate {
  MatrixXd Psi;
  MatrixXd K;  // -W^-1 Bbar^T Psi
};

/// One model-based step: K_k = -W^-1 Bbar^T Psi_k, evaluate it, improve.
PolicyIterate model_based_iterate(const MatrixXd& psi_k, const AugmentedSystem& aug,
                                  const MatrixXd& Q, const MatrixXd& W, double gamma);
/// The same step starting from an explicit gain.
PolicyIterate model_based_step(const MatrixXd& K_k, const AugmentedSystem& aug, const MatrixXd& Q,
                               const MatrixXd& W, double gamma);

/// Exact interval data for the LTI behaviour system z' = Az z, with
/// x = Sx z, u = Su z, cost weight M on z, via matrix exponentials.
IntervalRecord lti_interval_record(const MatrixXd& Az, const MatrixXd& Sx, const MatrixXd& Su,
                                   const MatrixXd& M, const VectorXd& z0, double T, double gamma);

/// Exact records for the behaviour policy u = Kb x + sum of sinusoids, the
/// sinusoids produced by an oscillator bank so the loop stays LTI; interval
/// initial states are drawn uniformly from [-1, 1].
std::vector<IntervalRecord> exact_behaviour_records(const AugmentedSystem& aug, const MatrixXd& Q,
                                                    const MatrixXd& Kb, int count, double T,
                                                    double gamma, std::uint64_t seed);

struct LearnerOptions {
  double tau = 1e-4;
  int max_iterations = 50;
  LeastSquaresOptions ls;
};

struct LearningResult {
  std::vector<MatrixXd> gains;     // K_0, K_1, ...
  std::vector<VectorXd> weights;   // stacked [w_c; vec W_a] per iteration
  std::vector<double> conditions;  // regressor condition per iteration
  bool converged = false;
  int iterations = 0;
  std::string failure;  // set when a least-squares step was rejected

  const MatrixXd& final_gain() const { return gains.back(); }
};

/// Policy iteration on a fixed batch of interval records from K0.
LearningResult run_off_policy(const std::vector<IntervalRecord>& records, const MatrixXd& K0,
                              const MatrixXd& W, double gamma, const LearnerOptions& opts = {});

/// Sum of sinusoids per input channel, reproducible from a seed.
class ExplorationNoise {
 public:
  ExplorationNoise() = default;
  ExplorationNoise(Eigen::Index channels, double amplitude, std::uint64_t seed, int components = 10,
                   double w_min = 0.1, double w_max = 10.0);
  VectorXd operator()(double t) const;
  Eigen::Index channels() const { return freq_.rows(); }

 private:
  double amplitude_ = 0.0;
  MatrixXd freq_;   // channels x components
  MatrixXd phase_;  // channels x components
};

}  // namespace occ
