#pragma once

// Fixed-step simulation of leaders, followers, observers and controller.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "occ/observers.hpp"
#include "occ/rl.hpp"
#include "occ/scenario.hpp"
#include "occ/synthesis.hpp"

namespace occ {

/// dx = f(t, x); dx is pre-sized.
using Rhs = std::function<void(double t, const VectorXd& x, VectorXd& dx)>;

/// Named, disjoint slices of the flat state vector.
class StateLayout {
 public:
  struct Slice {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
  };

  Eigen::Index add(const std::string& name, Eigen::Index size);
  const Slice& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  /// Name of the slice holding index k.
  const std::string& locate(Eigen::Index k) const;
  Eigen::Index size() const { return size_; }
  const std::vector<Slice>& slices() const { return slices_; }

  Eigen::VectorBlock<VectorXd> view(VectorXd& x, const std::string& name) const;
  Eigen::VectorBlock<const VectorXd> view(const VectorXd& x, const std::string& name) const;

 private:
  std::vector<Slice> slices_;
  Eigen::Index size_ = 0;
};

class Rk4 {
 public:
  explicit Rk4(Eigen::Index n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}
  void step(const Rhs& f, double t, VectorXd& x, double h);

 private:
  VectorXd k1_, k2_, k3_, k4_, tmp_;
};

/// Called after the initial state (step 0) and after every step; may modify
/// the state between steps (accumulator resets).
using StepHook = std::function<void(long step, double t, VectorXd& x)>;

struct IntegrationResult {
  std::vector<double> t;
  std::vector<VectorXd> x;
};

/// Classical RK4 with `round(t_final / h)` steps, keeping every
/// `log_every`-th state. Throws SimulationError on a non-finite state,
/// naming the slice when a layout is given.
IntegrationResult integrate(const Rhs& f, VectorXd x0, double h, double t_final, int log_every = 1,
                            const StateLayout* layout = nullptr, const StepHook& hook = {});

/// Euclidean distance from y to the convex hull of the vertices.
double hull_distance(const VectorXd& y, const std::vector<VectorXd>& vertices);

struct ContainmentError {
  VectorXd e;     // (L1 (x) I) Y_F + (L2 (x) I) Y_R
  VectorXd ebar;  // Y_F + (L1^-1 L2 (x) I) Y_R
  std::vector<double> hull_distance;            // to all leader outputs
  std::vector<double> hull_distance_reachable;  // to leaders with positive weight
};

ContainmentError containment_error(const VectorXd& YF, const VectorXd& YR,
                                   const LaplacianPartition& lap);

enum class RunMode { Offline, Learning };

struct RunOptions {
  RunMode mode = RunMode::Offline;
  bool zero_feedforward = false;  // K2 = 0 negative control
  bool keep_states = false;
};

struct Trajectory {
  double h = 0.0;
  int log_every = 1;
  std::vector<double> t;
  // [sample][follower]
  std::vector<std::vector<VectorXd>> y, yhat, y0, e, u;
  std::vector<std::vector<VectorXd>> leader_y;  // [sample][leader]
  std::vector<VectorXd> e_stacked, ebar_stacked;
  std::vector<ContainmentError> containment;
  std::vector<ObserverErrors> errors;
  std::vector<VectorXd> states;  // only with RunOptions::keep_states
};

struct FollowerLearning {
  LearningResult learning;
  std::vector<IntervalRecord> records;
  double collection_start = -1.0;
  double switch_time = -1.0;  // -1: never switched
  MatrixXd K_model;           // discounted-ARE gain for comparison
  MatrixXd K_applied;         // [K1, K2] used after the switch
  double gain_error = 0.0;    // max |K_learned - K_model|
};

struct LearningOutcome {
  std::vector<FollowerLearning> followers;
  double gate_time = -1.0;
  bool all_converged() const;
};

struct SimulationResult {
  Trajectory trajectory;
  GainSet gains;
  StateLayout layout;
  std::vector<VectorXd> follower_initial;
  ObserverErrorReport observer_report;
  std::optional<LearningOutcome> learning;
  double e_initial = 0.0;  // ||e(0)||
  double e_final = 0.0;    // ||e(t_final)||
  std::vector<double> hull_final;  // reachable-leader hull distance at t_final
};

SimulationResult run_scenario(const Scenario& s, const RunOptions& opts = {});

/// Component-wise right-hand side of the offline loop with the static leader
/// observer, on the state ordering [X; xi; eta; Omega]; for comparison with
/// the assembled closed-loop matrices.
Rhs static_loop_rhs(const Scenario& s, const GainSet& gains);

}  // namespace occ
