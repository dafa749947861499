#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "occ/observers.hpp"
#include "occ/scenario.hpp"
#include "occ/sim.hpp"
#include "test_util.hpp"

using namespace occ;
using testutil::col;
using testutil::mat;
using testutil::max_abs;

TEST(RelativeOutputs, DifferencePerEdge) {
  const Graph g = build_graph(2, 1, {{3, 1, 1}, {1, 2, 2}});
  const auto rel = relative_outputs(g, {col({1, 2}), col({4, 4})}, {col({0, 5})});
  ASSERT_EQ(rel.size(), 2u);
  EXPECT_LT(max_abs(rel[0] - col({-1, 3})), 1e-15);
  EXPECT_LT(max_abs(rel[1] - col({-3, -2})), 1e-15);
}

TEST(StateObserver, PerfectEstimatesHaveNoInnovation) {
  const Scenario s = paper_scenario();
  const std::size_t n = s.followers.size();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<VectorXd> x(n), u(n), y(n);
  StateObserverGains gains;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = s.followers[i];
    x[i] = VectorXd::NullaryExpr(f.states(), [&] { return g(rng); });
    u[i] = VectorXd::NullaryExpr(f.inputs(), [&] { return g(rng); });
    y[i] = f.C * x[i];
    gains.F.push_back(MatrixXd::Ones(f.states(), s.leader.outputs()));
    gains.mu.push_back(1.0);
  }
  std::vector<VectorXd> yl;
  for (const auto& w : s.leader_initial) yl.push_back(s.leader.D * w);
  const auto rel = relative_outputs(s.graph, y, yl);
  const auto dxi = state_observer_rhs(s.graph, s.followers, gains, x, u, rel, yl);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = s.followers[i];
    EXPECT_LT((dxi[i] - f.A * x[i] - f.B * u[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(StateObserver, ScalarHandEvaluation) {
  const Graph g = build_graph(1, 1, {{2, 1, 1}});
  const std::vector<FollowerModel> f{{mat({{0}}), mat({{0}}), mat({{1}})}};
  const StateObserverGains gains{{mat({{1}})}, {1.0}};
  const std::vector<VectorXd> y{col({1})}, yl{col({0})};
  const auto dxi = state_observer_rhs(g, f, gains, {col({0})}, {col({0})}, relative_outputs(g, y, yl), yl);
  EXPECT_DOUBLE_EQ(dxi[0](0), 1.0);
}

TEST(AdaptiveObserver, ExactEstimatesAreStationary) {
  const Scenario s = paper_scenario();
  const LaplacianPartition lap = laplacian_partition(s.graph);
  const auto targets = convex_targets(lap, s.leader_initial);
  std::vector<AdaptiveEstimate> est;
  for (const auto& w : targets) est.push_back({w, s.leader.S, s.leader.D});
  const LeaderBroadcast lb{s.leader.S, s.leader.D, s.leader_initial};
  const auto d = adaptive_observer_rhs(s.graph, est, lb, AdaptiveCouplings{});
  for (std::size_t i = 0; i < est.size(); ++i) {
    EXPECT_LT(max_abs(d[i].S), 1e-14);
    EXPECT_LT(max_abs(d[i].D), 1e-14);
    EXPECT_LT(max_abs(d[i].eta_hat - s.leader.S * targets[i]), 1e-14);
  }
}

TEST(AdaptiveObserver, ChainHandEvaluation) {
  const Graph g = build_graph(2, 1, {{3, 1, 1}, {1, 2, 1}});
  const std::vector<AdaptiveEstimate> est{{col({0}), mat({{1}}), mat({{1}})},
                                          {col({0}), mat({{2}}), mat({{1}})}};
  const LeaderBroadcast lb{mat({{0}}), mat({{1}}), {col({0})}};
  const auto d = adaptive_observer_rhs(g, est, lb, AdaptiveCouplings{1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(d[0].S(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(d[1].S(0, 0), -1.0);
}

TEST(StaticObserver, Examples) {
  const Scenario s = paper_scenario();
  const auto targets = convex_targets(laplacian_partition(s.graph), s.leader_initial);
  const auto d = static_observer_rhs(s.graph, targets, s.leader.S, s.leader_initial, 10.0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    EXPECT_LT(max_abs(d[i] - s.leader.S * targets[i]), 1e-13);
  }
  const Graph g = build_graph(1, 1, {{2, 1, 1}});
  EXPECT_DOUBLE_EQ(static_observer_rhs(g, {col({0})}, mat({{0}}), {col({1})}, 1.0)[0](0), 1.0);
}

TEST(ConvexTargets, RowSumIdentity) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const Graph gr = random_valid_graph(rng, 5, 3);
    const LaplacianPartition lap = laplacian_partition(gr);
    const MatrixXd S = MatrixXd::NullaryExpr(2, 2, [&] { return g(rng); });
    const MatrixXd lhs = -kron(lap.L1.inverse() * lap.L2, MatrixXd::Identity(2, 2)) *
                         kron(MatrixXd::Ones(3, 1), S);
    EXPECT_LT(max_abs(lhs - kron(MatrixXd::Ones(5, 1), S)), 1e-12);
  }
}

TEST(SErrorFlow, MatchesIntegratedAdaptiveLaw) {
  const Scenario s = paper_scenario();
  const Graph& g = s.graph;
  const LaplacianPartition lap = laplacian_partition(g);
  const Eigen::Index r = s.leader.states();
  const std::size_t n = s.followers.size();
  const AdaptiveCouplings c{3.0, 10.0, 3.0};
  const LeaderBroadcast lb{s.leader.S, s.leader.D, s.leader_initial};

  // State: stacked vec(S_i) only; eta and D held fixed, they do not enter dS.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  VectorXd x0(static_cast<Eigen::Index>(n) * r * r);
  for (Eigen::Index k = 0; k < x0.size(); ++k) x0(k) = u(rng);
  const Rhs f = [&](double, const VectorXd& x, VectorXd& dx) {
    std::vector<AdaptiveEstimate> est;
    for (std::size_t i = 0; i < n; ++i) {
      est.push_back({VectorXd::Zero(r), unvec(x.segment(i * r * r, r * r), r, r), s.leader.D});
    }
    const auto d = adaptive_observer_rhs(g, est, lb, c);
    for (std::size_t i = 0; i < n; ++i) dx.segment(i * r * r, r * r) = vec(d[i].S);
  };
  const auto res = integrate(f, x0, 1e-3, 2.0, 100);
  VectorXd s_tilde0 = x0;
  for (std::size_t i = 0; i < n; ++i) s_tilde0.segment(i * r * r, r * r) -= vec(s.leader.S);
  for (std::size_t k = 0; k < res.t.size(); ++k) {
    VectorXd sim = res.x[k];
    for (std::size_t i = 0; i < n; ++i) sim.segment(i * r * r, r * r) -= vec(s.leader.S);
    EXPECT_LT((sim - s_error_flow(lap.L1, c.beta1, r, res.t[k], s_tilde0)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SErrorFlow, ClosedFormKronecker) {
  const MatrixXd L1 = mat({{1, 0}, {-1, 2}});
  const VectorXd s0 = col({1, 2, 3, 4, 5, 6, 7, 8});
  const MatrixXd gen = -0.5 * 1.7 * kron(L1, MatrixXd::Identity(4, 4));
  EXPECT_LT(max_abs(s_error_flow(L1, 0.5, 2, 1.7, s0) - gen.exp() * s0), 1e-12);
}

TEST(ObserverErrors, ZeroErrorIsZero) {
  const Scenario s = paper_scenario();
  const auto targets = convex_targets(laplacian_partition(s.graph), s.leader_initial);
  std::vector<VectorXd> x;
  std::vector<AdaptiveEstimate> est;
  for (std::size_t i = 0; i < s.followers.size(); ++i) {
    x.push_back(VectorXd::Ones(s.followers[i].states()));
    est.push_back({targets[i], s.leader.S, s.leader.D});
  }
  const ObserverErrors e = observer_errors(x, x, est, targets, s.leader);
  EXPECT_EQ(e.max(), 0.0);
  const ObserverErrorReport rep = observer_error_report({0.0, 1.0}, {e, e});
  EXPECT_EQ(rep.max_after(0.0), 0.0);
  for (const auto& ch : rep.fits)
    for (const auto& fit : ch) EXPECT_FALSE(fit.valid);
}

TEST(FitExponential, RecoversRate) {
  std::vector<double> t, v;
  for (int k = 0; k < 50; ++k) {
    t.push_back(0.1 * k);
    v.push_back(3.0 * std::exp(-2.5 * t.back()));
  }
  const ExponentialFit fit = fit_exponential(t, v);
  EXPECT_TRUE(fit.valid);
  EXPECT_NEAR(fit.rate, 2.5, 1e-10);
  EXPECT_NEAR(fit.log_amplitude, std::log(3.0), 1e-10);
}

TEST(ChannelNames, Stable) {
  EXPECT_STREQ(channel_name(ObserverChannel::Xi), "xi");
  EXPECT_STREQ(channel_name(ObserverChannel::S), "S");
}
