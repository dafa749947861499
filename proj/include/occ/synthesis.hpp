#pragma once

// Offline design for a whole scenario and the pre-flight validation report.

#include <string>
#include <vector>

#include "occ/observers.hpp"
#include "occ/riccati.hpp"
#include "occ/scenario.hpp"

namespace occ {

struct FollowerGains {
  RegulatorSolution regulator;
  ObserverGain observer;
  DiscountedGain optimal;
  MatrixXd K1;  // feedback on xi
  MatrixXd K2;  // feed-forward on the leader estimate
  double mu = 1.0;
  double gamma = 0.0;
  double gamma_star = 0.0;
  double gamma_star_scalar = 0.0;

  MatrixXd Kbar() const;  // [K1, K2]
};

struct GainSet {
  std::vector<FollowerGains> followers;
  double beta = 10.0;
  AdaptiveCouplings couplings;
  double mu_bound = 0.0;

  LoopGains loop_gains() const;
  StateObserverGains observer_gains() const;
};

/// Regulator, observer and discounted-ARE design for every follower. The
/// feed-forward block follows the scenario's FeedforwardMode. Errors are
/// SynthesisError prefixed with the follower index.
GainSet synthesize(const Scenario& s);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  TopologyReport topology;
  AssumptionReport assumptions;
  std::vector<Check> checks;

  bool ok() const;
};

/// Graph, standing assumptions, discount bound and coupling bound. Never
/// throws for a structurally valid scenario.
ValidationReport validate_scenario(const Scenario& s);

}  // namespace occ
