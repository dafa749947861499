#pragma once

// Scenario configuration: models, topology, observer and cost weights,
// integrator and learner settings. Optional per-follower lists may be left
// empty to take the defaults documented on each field.

#include <cstdint>
#include <string>
#include <vector>

#include "occ/dynamics.hpp"
#include "occ/graph.hpp"

namespace occ {

enum class LeaderObserverKind { Adaptive, Static };
enum class FeedforwardMode { Regulator, Optimal };

struct ObserverInitial {
  std::vector<VectorXd> xi;       // empty: zeros
  std::vector<VectorXd> eta;      // empty: zeros
  std::vector<MatrixXd> S;        // empty: zeros
  std::vector<MatrixXd> D;        // empty: zeros
};

struct ObserverConfig {
  std::vector<double> mu;
  std::vector<MatrixXd> E;
  std::vector<MatrixXd> R;
  double beta = 10.0;  // static leader observer
  double beta1 = 3.0;
  double beta2 = 10.0;
  double beta3 = 3.0;
  LeaderObserverKind kind = LeaderObserverKind::Adaptive;
  ObserverInitial initial;
};

struct WeightConfig {
  std::vector<MatrixXd> Q;  // q x q
  std::vector<MatrixXd> W;  // p_i x p_i
  std::vector<double> gamma;
};

struct SimConfig {
  double h = 1e-3;
  double t_final = 40.0;
  std::uint64_t seed = 1;  // follower initial states when not given
  int log_every = 10;
};

struct NoiseConfig {
  double amplitude = 1.0;
  std::uint64_t seed = 7;
};

struct LearnerSettings {
  double T = 0.5;
  std::vector<int> samples;  // empty: 2 x (critic + p x actor size)
  double tau = 1e-4;
  int max_iter = 50;
  double gate = 1e-3;  // observer-error threshold before data collection
  NoiseConfig noise;
  std::vector<MatrixXd> K0;  // empty: LQR of (A_i, B_i), Q = I, R = 1, zero feed-forward
};

struct Scenario {
  Graph graph;
  LeaderModel leader;
  std::vector<VectorXd> leader_initial;
  std::vector<FollowerModel> followers;
  std::vector<VectorXd> follower_initial;  // empty: seeded uniform [-1, 1]
  ObserverConfig observers;
  WeightConfig weights;
  SimConfig sim;
  LearnerSettings learner;
  FeedforwardMode feedforward = FeedforwardMode::Regulator;

  std::size_t follower_count() const { return followers.size(); }
};

/// Field-for-field equality (matrices compared exactly).
bool operator==(const Scenario& a, const Scenario& b);

/// The seven-agent experiment: three leaders, four heterogeneous followers.
Scenario paper_scenario();

/// Structural checks on the configuration (list lengths, matrix shapes,
/// positive couplings). Throws ValidationError naming the section.
void check_scenario(const Scenario& s);

/// Initial follower states: the configured ones, or seeded uniform [-1, 1].
std::vector<VectorXd> follower_initial_states(const Scenario& s);

/// Defaulted initial actor gains (p_i x (N_i + qbar)).
std::vector<MatrixXd> initial_gains(const Scenario& s);

/// Defaulted per-follower sample counts.
std::vector<int> sample_counts(const Scenario& s);

}  // namespace occ
