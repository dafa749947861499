#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "occ/errors.hpp"
#include "occ/rl.hpp"
#include "occ/scenario.hpp"
#include "occ/sim.hpp"
#include "test_util.hpp"

using namespace occ;
using testutil::col;
using testutil::mat;
using testutil::max_abs;

namespace {

// x' = u, y = x tracking a constant leader.
struct ScalarToy {
  AugmentedSystem aug = augment({mat({{0}}), mat({{1}}), mat({{1}})}, {mat({{0}}), mat({{1}})});
  MatrixXd Q = mat({{1}});
  MatrixXd W = mat({{1}});
  double gamma = 0.1;
  MatrixXd K0 = mat({{-1, 0}});
};

}  // namespace

TEST(CriticBasis, Examples) {
  EXPECT_LT(max_abs(critic_basis(col({2, 3})) - col({4, 6, 9})), 1e-15);
  EXPECT_EQ(max_abs(critic_basis(VectorXd::Zero(4))), 0.0);
  const VectorXd e1 = VectorXd::Unit(3, 0);
  EXPECT_LT(max_abs(critic_basis(e1) - VectorXd::Unit(6, 0)), 1e-15);
  EXPECT_EQ(critic_size(5), 15);
}

TEST(WeightsToMatrix, Examples) {
  EXPECT_LT(max_abs(weights_to_matrix(col({1, 0, 1})) - MatrixXd::Identity(2, 2)), 1e-15);
  EXPECT_LT(max_abs(weights_to_matrix(col({0, 2, 0})) - mat({{0, 1}, {1, 0}})), 1e-15);
  EXPECT_THROW(weights_to_matrix(col({1, 2})), std::invalid_argument);
}

TEST(WeightsToMatrix, QuadraticFormIdentityAndRoundTrip) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (Eigen::Index d = 1; d <= 6; ++d) {
    const VectorXd w = VectorXd::NullaryExpr(critic_size(d), [&] { return g(rng); });
    const MatrixXd psi = weights_to_matrix(w);
    for (int k = 0; k < 20; ++k) {
      const VectorXd x = VectorXd::NullaryExpr(d, [&] { return g(rng); });
      EXPECT_NEAR(w.dot(critic_basis(x)), x.dot(psi * x), 1e-12 * (1 + std::abs(x.dot(psi * x))));
    }
    EXPECT_EQ(matrix_to_weights(psi), w);
  }
}

TEST(IntervalRecord, ConstantIntegrandWithoutDiscount) {
  const MatrixXd az = MatrixXd::Zero(2, 2);
  const VectorXd z0 = col({2, -1});
  const IntervalRecord r = lti_interval_record(az, mat({{1, 0}}), mat({{0, 1}}), mat({{1, 0}, {0, 0}}), z0, 0.7, 0.0);
  EXPECT_NEAR(r.cost, 4 * 0.7, 1e-13);
  EXPECT_NEAR(r.xx(0, 0), 4 * 0.7, 1e-13);
  EXPECT_NEAR(r.xu(0, 0), -2 * 0.7, 1e-13);
}

TEST(IntervalRecord, RampClosedForm) {
  // x' = v with v constant: x(s) = x0 + v s.
  const MatrixXd az = mat({{0, 1}, {0, 0}});
  const double x0 = 0.3, v = -1.2, T = 0.5;
  const IntervalRecord r = lti_interval_record(az, mat({{1, 0}}), mat({{0, 1}}), mat({{1, 0}, {0, 0}}),
                                               col({x0, v}), T, 0.0);
  EXPECT_NEAR(r.xx(0, 0), x0 * x0 * T + x0 * v * T * T + v * v * T * T * T / 3, 1e-12);
  EXPECT_NEAR(r.xu(0, 0), v * (x0 * T + v * T * T / 2), 1e-12);
  EXPECT_NEAR(r.x_end(0), x0 + v * T, 1e-14);
}

TEST(IntervalRecord, DiscountedDecayClosedForm) {
  const double a = 0.8, g = 0.3, T = 1.1, x0 = 1.5;
  const IntervalRecord r = lti_interval_record(mat({{-a}}), mat({{1}}), mat({{2}}), mat({{1}}), col({x0}), T, g);
  const double ref = x0 * x0 * (1 - std::exp(-(2 * a + g) * T)) / (2 * a + g);
  EXPECT_NEAR(r.xx(0, 0), ref, 1e-13);
  EXPECT_NEAR(r.xu(0, 0), 2 * ref, 1e-13);
  EXPECT_NEAR(r.cost, ref, 1e-13);
}

TEST(IntervalRecord, AccumulatorMatchesExactIntegrals) {
  const Scenario s = paper_scenario();
  const AugmentedSystem aug = augment(s.followers[1], s.leader);
  const MatrixXd K = initial_gains(s)[1];
  const MatrixXd& Q = s.weights.Q[1];
  const double gamma = 0.2, T = 0.5;
  const Eigen::Index d = aug.dim(), p = aug.Bbar.cols();
  const VectorXd x0 = col({0.4, -0.3, 1.0, 0.2});

  // Plant and accumulator integrated together.
  const Rhs f = [&](double t, const VectorXd& z, VectorXd& dz) {
    const VectorXd x = z.head(d);
    const VectorXd u = K * x;
    dz.head(d) = aug.P * x + aug.Bbar * u;
    IntervalAccumulator::rhs(gamma, t, x, u, aug.Cbarbar * x, Q, dz.tail(dz.size() - d));
  };
  VectorXd z0 = VectorXd::Zero(d + IntervalAccumulator::size(d, p));
  z0.head(d) = x0;
  VectorXd z = z0;
  Rk4 rk(z.size());
  for (int k = 0; k < 500; ++k) rk.step(f, k * 1e-3, z, 1e-3);
  const IntervalRecord num = IntervalAccumulator::unpack(z.tail(z.size() - d), d, p, T, x0, z.head(d));

  const MatrixXd az = aug.P + aug.Bbar * K;
  const IntervalRecord ex = lti_interval_record(az, MatrixXd::Identity(d, d), K, aug.state_cost(Q), x0, T, gamma);
  EXPECT_LT(max_abs(num.xx - ex.xx), 1e-8);
  EXPECT_LT(max_abs(num.xu - ex.xu), 1e-8);
  EXPECT_NEAR(num.cost, ex.cost, 1e-8);
  EXPECT_LT(max_abs(num.x_end - ex.x_end), 1e-8);

  // Bellman residual of the true value on the numerical row.
  const MatrixXd psi = policy_evaluation(aug, Q, s.weights.W[1], gamma, K);
  const RegressionRow row = sample_row(num, K, s.weights.W[1], gamma);
  const double lhs = row.xi.head(critic_size(d)).dot(matrix_to_weights(psi));
  EXPECT_NEAR(lhs, row.y, 1e-8);
}

TEST(SampleRow, OnPolicyDataHasZeroActorBlock) {
  ScalarToy t;
  const MatrixXd az = t.aug.P + t.aug.Bbar * t.K0;
  const IntervalRecord r = lti_interval_record(az, MatrixXd::Identity(2, 2), t.K0, t.aug.state_cost(t.Q),
                                               col({1.0, 0.5}), 0.5, t.gamma);
  const RegressionRow row = sample_row(r, t.K0, t.W, t.gamma);
  EXPECT_LT(row.xi.tail(2).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LeastSquares, RecoversKnownValueAndGain) {
  const Scenario s = paper_scenario();
  for (std::size_t i = 0; i < s.followers.size(); ++i) {
    const AugmentedSystem aug = augment(s.followers[i], s.leader);
    const MatrixXd& Q = s.weights.Q[i];
    const MatrixXd& W = s.weights.W[i];
    const double g = s.weights.gamma[i];
    const MatrixXd K0 = initial_gains(s)[i];
    const auto recs = exact_behaviour_records(aug, Q, K0, 60, 0.5, g, 5 + i);
    // Target a policy different from the behaviour one.
    const MatrixXd target = model_based_step(K0, aug, Q, W, g).K;
    const PolicyIterate ref = model_based_step(target, aug, Q, W, g);
    const LeastSquaresUpdate u = least_squares_update(build_batch(recs, target, W, g));
    EXPECT_LT(max_abs(u.psi() - ref.Psi), 1e-6 * std::max(1.0, max_abs(ref.Psi))) << i;
    EXPECT_LT(max_abs(u.gain() - ref.K), 1e-6) << i;
    EXPECT_LT(u.condition, 1e8);
  }
}

TEST(LeastSquares, TooFewRowsIsAPreconditionError) {
  ScalarToy t;
  const auto recs = exact_behaviour_records(t.aug, t.Q, t.K0, 4, 0.5, t.gamma, 1);
  EXPECT_THROW(least_squares_update(build_batch(recs, t.K0, t.W, t.gamma)), std::invalid_argument);
}

TEST(LeastSquares, DuplicateRowsAreRankDeficient) {
  ScalarToy t;
  const auto one = exact_behaviour_records(t.aug, t.Q, t.K0, 1, 0.5, t.gamma, 1);
  const std::vector<IntervalRecord> recs(12, one.front());
  EXPECT_THROW(least_squares_update(build_batch(recs, t.K0, t.W, t.gamma)), SynthesisError);
}

TEST(ModelBased, FixedPoint) {
  const Scenario s = paper_scenario();
  const AugmentedSystem aug = augment(s.followers[2], s.leader);
  const DiscountedGain dg = discounted_are(aug, s.weights.Q[2], s.weights.W[2], s.weights.gamma[2]);
  const PolicyIterate it = model_based_iterate(dg.Psi.X, aug, s.weights.Q[2], s.weights.W[2], s.weights.gamma[2]);
  EXPECT_LT(max_abs(it.Psi - dg.Psi.X), 1e-8 * max_abs(dg.Psi.X));
  EXPECT_LT(max_abs(it.K - dg.Kbar), 1e-8);
}

TEST(ModelBased, ScalarToyMatchesKleinmanOnShiftedSystem) {
  ScalarToy t;
  const MatrixXd shifted = t.aug.P - 0.5 * t.gamma * MatrixXd::Identity(2, 2);
  CareOptions opts;
  opts.keep_history = true;
  const auto nk = solve_care(shifted, t.aug.state_cost(t.Q), t.aug.Bbar, t.W, opts, MatrixXd(-t.K0));
  MatrixXd K = t.K0;
  for (std::size_t k = 0; k < nk.history.size(); ++k) {
    const PolicyIterate it = model_based_step(K, t.aug, t.Q, t.W, t.gamma);
    EXPECT_LT(max_abs(it.Psi - nk.history[k]), 1e-10) << "iteration " << k;
    K = it.K;
  }
}

TEST(ModelBased, FollowerTwoConvergesQuickly) {
  const Scenario s = paper_scenario();
  const AugmentedSystem aug = augment(s.followers[1], s.leader);
  const MatrixXd& Q = s.weights.Q[1];
  const MatrixXd& W = s.weights.W[1];
  const double g = s.weights.gamma[1];
  const DiscountedGain dg = discounted_are(aug, Q, W, g);
  MatrixXd K = initial_gains(s)[1];
  int used = 0;
  for (; used < 10 && max_abs(K - dg.Kbar) > 1e-6; ++used) K = model_based_step(K, aug, Q, W, g).K;
  EXPECT_LE(used, 10);
  EXPECT_LT(max_abs(K - dg.Kbar), 1e-6);
}

TEST(OffPolicy, ExactDataReproducesModelIterationEveryStep) {
  const Scenario s = paper_scenario();
  struct Case {
    AugmentedSystem aug;
    MatrixXd Q, W, K0;
    double gamma;
  };
  ScalarToy t;
  std::vector<Case> cases{{t.aug, t.Q, t.W, t.K0, t.gamma}};
  for (std::size_t i = 0; i < 4; ++i) {
    cases.push_back({augment(s.followers[i], s.leader), s.weights.Q[i], s.weights.W[i], initial_gains(s)[i],
                     s.weights.gamma[i]});
  }
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Case& k = cases[c];
    const Eigen::Index d = k.aug.dim(), p = k.aug.Bbar.cols();
    const auto recs = exact_behaviour_records(k.aug, k.Q, k.K0, static_cast<int>(3 * (critic_size(d) + p * d)),
                                              0.5, k.gamma, 40 + c);
    MatrixXd K = k.K0;
    for (int it = 0; it < 8; ++it) {
      const LeastSquaresUpdate u = least_squares_update(build_batch(recs, K, k.W, k.gamma));
      const PolicyIterate ref = model_based_step(K, k.aug, k.Q, k.W, k.gamma);
      EXPECT_LT(max_abs(u.gain() - ref.K), 1e-6) << "case " << c << " iteration " << it;
      EXPECT_LT(max_abs(u.psi() - ref.Psi), 1e-6 * std::max(1.0, max_abs(ref.Psi)));
      K = ref.K;
    }
  }
}

TEST(OffPolicy, ScalarToyLearnsDiscountedGain) {
  ScalarToy t;
  const auto recs = exact_behaviour_records(t.aug, t.Q, t.K0, 20, 0.5, t.gamma, 3);
  const LearningResult res = run_off_policy(recs, t.K0, t.W, t.gamma);
  ASSERT_TRUE(res.converged) << res.failure;
  const DiscountedGain dg = discounted_are(t.aug, t.Q, t.W, t.gamma);
  EXPECT_LT(max_abs(res.final_gain() - dg.Kbar), 1e-3);
  EXPECT_EQ(res.gains.size(), res.weights.size());
  EXPECT_EQ(res.conditions.size(), static_cast<std::size_t>(res.iterations));
}

TEST(OffPolicy, HugeToleranceStopsAfterOneIteration) {
  ScalarToy t;
  const auto recs = exact_behaviour_records(t.aug, t.Q, t.K0, 20, 0.5, t.gamma, 3);
  LearnerOptions opts;
  opts.tau = 1e6;
  const LearningResult res = run_off_policy(recs, t.K0, t.W, t.gamma, opts);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1);
}

TEST(OffPolicy, ResultDoesNotDependOnExploration) {
  const Scenario s = paper_scenario();
  const AugmentedSystem aug = augment(s.followers[3], s.leader);
  const MatrixXd K0 = initial_gains(s)[3];
  std::vector<MatrixXd> learned;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto recs = exact_behaviour_records(aug, s.weights.Q[3], K0, 60, 0.5, s.weights.gamma[3], seed);
    const LearningResult res = run_off_policy(recs, K0, s.weights.W[3], s.weights.gamma[3]);
    ASSERT_TRUE(res.converged) << res.failure;
    learned.push_back(res.final_gain());
  }
  EXPECT_LT(max_abs(learned[0] - learned[1]), 1e-3);
  EXPECT_LT(max_abs(learned[0] - learned[2]), 1e-3);
}

TEST(OffPolicy, RejectedStepIsReported) {
  ScalarToy t;
  const auto one = exact_behaviour_records(t.aug, t.Q, t.K0, 1, 0.5, t.gamma, 1);
  const LearningResult res = run_off_policy(std::vector<IntervalRecord>(10, one.front()), t.K0, t.W, t.gamma);
  EXPECT_FALSE(res.converged);
  EXPECT_NE(res.failure.find("insufficient excitation"), std::string::npos);
  EXPECT_EQ(res.gains.size(), 1u);
}

TEST(ExplorationNoise, SeedDeterminesSignal) {
  const ExplorationNoise a(2, 0.5, 7), b(2, 0.5, 7), c(2, 0.5, 8);
  double diff = 0.0;
  for (double t = 0.0; t < 5.0; t += 0.37) {
    EXPECT_EQ(a(t), b(t));
    diff = std::max(diff, (a(t) - c(t)).cwiseAbs().maxCoeff());
    EXPECT_LE(a(t).cwiseAbs().maxCoeff(), 0.5 * 10 + 1e-12);
  }
  EXPECT_GT(diff, 1e-3);
  EXPECT_EQ(a.channels(), 2);
}
