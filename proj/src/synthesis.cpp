#include "occ/synthesis.hpp"

#include <cstdio>

#include "occ/errors.hpp"

namespace occ {

namespace {

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

}  // namespace

MatrixXd FollowerGains::Kbar() const {
  MatrixXd k(K1.rows(), K1.cols() + K2.cols());
  k << K1, K2;
  return k;
}

LoopGains GainSet::loop_gains() const {
  LoopGains g;
  for (const auto& f : followers) {
    g.K1.push_back(f.K1);
    g.K2.push_back(f.K2);
    g.F.push_back(f.observer.F);
    g.mu.push_back(f.mu);
  }
  g.beta = beta;
  return g;
}

StateObserverGains GainSet::observer_gains() const {
  StateObserverGains g;
  for (const auto& f : followers) {
    g.F.push_back(f.observer.F);
    g.mu.push_back(f.mu);
  }
  return g;
}

GainSet synthesize(const Scenario& s) {
  check_scenario(s);
  GainSet out;
  out.beta = s.observers.beta;
  out.couplings = {s.observers.beta1, s.observers.beta2, s.observers.beta3};
  out.mu_bound = coupling_bound(laplacian_partition(s.graph).L1);
  for (std::size_t i = 0; i < s.followers.size(); ++i) {
    const FollowerModel& f = s.followers[i];
    try {
      FollowerGains g;
      g.regulator = solve_regulator(f, s.leader);
      g.observer = observer_synthesis(f, s.observers.E[i], s.observers.R[i]);
      const AugmentedSystem aug = augment(f, s.leader);
      g.gamma = s.weights.gamma[i];
      g.optimal = discounted_are(aug, s.weights.Q[i], s.weights.W[i], g.gamma);
      g.K1 = g.optimal.K1();
      g.K2 = s.feedforward == FeedforwardMode::Optimal ? g.optimal.K2()
                                                       : feedforward_gain(g.regulator, g.K1);
      g.mu = s.observers.mu[i];
      g.gamma_star = discount_bound(aug, s.weights.Q[i], s.weights.W[i]);
      g.gamma_star_scalar = discount_bound_scalar(aug, s.weights.Q[i], s.weights.W[i]);
      out.followers.push_back(std::move(g));
    } catch (const ValidationError& e) {
      throw ValidationError("follower " + std::to_string(i + 1) + ": " + e.what());
    } catch (const std::exception& e) {
      throw SynthesisError("follower " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

bool ValidationReport::ok() const {
  if (!topology.ok() || !assumptions.ok()) return false;
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

ValidationReport validate_scenario(const Scenario& s) {
  check_scenario(s);
  ValidationReport rep;
  rep.topology = validate_topology(s.graph);
  rep.assumptions = check_assumptions(s.followers, s.leader);

  rep.checks.push_back({"graph acyclic", rep.topology.acyclic, ""});
  std::string unreachable;
  for (int id : rep.topology.unreachable_followers) unreachable += " " + std::to_string(id);
  rep.checks.push_back({"followers reachable from a leader", rep.topology.leader_reachable,
                        unreachable.empty() ? "" : "unreachable:" + unreachable});
  rep.checks.push_back({"leader S marginally stable", rep.assumptions.leader.marginally_stable, ""});
  rep.checks.push_back({"leader D full row rank", rep.assumptions.leader.output_full_row_rank, ""});
  for (std::size_t i = 0; i < rep.assumptions.followers.size(); ++i) {
    const auto& a = rep.assumptions.followers[i];
    const std::string who = "follower " + std::to_string(i + 1) + " ";
    rep.checks.push_back({who + "(A, B) stabilizable", a.stabilizable, ""});
    rep.checks.push_back({who + "(A, C) detectable", a.detectable, ""});
    rep.checks.push_back({who + "C full row rank", a.output_full_row_rank, ""});
    rep.checks.push_back({who + "regulator equations solvable", a.regulator_solvable,
                          fmt("residual %.3g", a.regulator_residual) +
                              (a.regulator_unique ? "" : ", not unique")});
  }

  if (rep.topology.ok()) {
    const double bound = coupling_bound(laplacian_partition(s.graph).L1);
    for (std::size_t i = 0; i < s.followers.size(); ++i) {
      const double mu = s.observers.mu[i];
      rep.checks.push_back({"follower " + std::to_string(i + 1) + " coupling gain mu", mu >= bound,
                            fmt("mu = %.6g, bound = %.6g", mu, bound)});
    }
  }
  for (std::size_t i = 0; i < s.followers.size(); ++i) {
    const AugmentedSystem aug = augment(s.followers[i], s.leader);
    const double gs = discount_bound(aug, s.weights.Q[i], s.weights.W[i]);
    const double gs_scalar = discount_bound_scalar(aug, s.weights.Q[i], s.weights.W[i]);
    const double g = s.weights.gamma[i];
    rep.checks.push_back({"follower " + std::to_string(i + 1) + " discount factor gamma", g <= gs,
                          fmt("gamma = %.6g, gamma* = %.6g (scalar-norm variant %.6g)", g, gs,
                              gs_scalar)});
  }
  return rep;
}

}  // namespace occ
