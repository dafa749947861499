#include <gtest/gtest.h>

#include <random>

#include "occ/dynamics.hpp"
#include "occ/errors.hpp"
#include "occ/scenario.hpp"
#include "occ/synthesis.hpp"
#include "test_util.hpp"

using namespace occ;
using testutil::mat;
using testutil::max_abs;

namespace {

const Scenario& seven() {
  static const Scenario s = paper_scenario();
  return s;
}

}  // namespace

TEST(CheckAssumptions, SevenAgentModelsPass) {
  const AssumptionReport rep = check_assumptions(seven().followers, seven().leader);
  EXPECT_TRUE(rep.ok());
  EXPECT_TRUE(rep.leader.marginally_stable);
  for (const auto& f : rep.followers) {
    EXPECT_TRUE(f.stabilizable);
    EXPECT_TRUE(f.detectable);
    EXPECT_TRUE(f.regulator_unique);
  }
}

TEST(CheckAssumptions, UncontrollableMarginalMode) {
  const FollowerModel f{mat({{0}}), mat({{0}}), mat({{1}})};
  const LeaderModel l{mat({{0}}), mat({{1}})};
  const AssumptionReport rep = check_assumptions({f}, l);
  EXPECT_FALSE(rep.followers[0].stabilizable);
  EXPECT_FALSE(rep.ok());
}

TEST(CheckAssumptions, UnstableLeader) {
  const FollowerModel f{mat({{0, 1}, {0, 0}}), mat({{0}, {1}}), mat({{1, 0}})};
  const LeaderModel l{mat({{1, 0}, {0, -1}}), mat({{1, 0}})};
  EXPECT_FALSE(check_assumptions({f}, l).leader.marginally_stable);
}

TEST(MarginallyStable, DefectiveImaginaryEigenvalueFails) {
  EXPECT_TRUE(marginally_stable(mat({{0, 1}, {-2, 0}})));
  EXPECT_TRUE(marginally_stable(mat({{0, 0}, {0, 0}})));
  EXPECT_FALSE(marginally_stable(mat({{0, 1}, {0, 0}})));
  EXPECT_TRUE(marginally_stable(mat({{-1, 5}, {0, -2}})));
}

TEST(CheckAssumptions, PbhAgreesWithStaircaseOnRandomSystems) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 60; ++trial) {
    // Kalman form with one uncontrollable mode of random sign, rotated.
    const int n = 3;
    MatrixXd blk = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) blk(i, j) = g(rng);
    blk.row(n - 1).head(n - 1).setZero();
    blk(n - 1, n - 1) = (trial % 2 ? 1.0 : -1.0) * (0.2 + std::abs(g(rng)));
    MatrixXd bk = MatrixXd::Zero(n, 1);
    bk(0, 0) = 1.0 + std::abs(g(rng));
    bk(1, 0) = g(rng);
    MatrixXd t(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t(i, j) = g(rng);
    const Eigen::HouseholderQR<MatrixXd> qr(t);
    const MatrixXd q = qr.householderQ();
    const MatrixXd a = q * blk * q.transpose();
    const MatrixXd b = q * bk;

    MatrixXd basis;
    const Eigen::Index nc = controllability_staircase(a, b, basis);
    const MatrixXd at = basis.transpose() * a * basis;
    bool oracle = true;
    if (nc < n) {
      const MatrixXd au = at.bottomRightCorner(n - nc, n - nc);
      oracle = au.eigenvalues().real().maxCoeff() < 0.0;
    }
    EXPECT_EQ(pbh_stabilizable(a, b), oracle) << "trial " << trial;
    EXPECT_EQ(pbh_stabilizable(a, b), trial % 2 == 0) << "trial " << trial;
    // Detectability is the dual test on the transposed pair.
    EXPECT_EQ(pbh_detectable(a.transpose().eval(), b.transpose().eval()), oracle);
  }
}

TEST(SolveRegulator, SevenAgentFollowers) {
  const auto& s = seven();
  const RegulatorSolution r1 = solve_regulator(s.followers[0], s.leader);
  EXPECT_LT(max_abs(r1.Pi - mat({{4, -16}, {1, 0}, {0, 1}})), 1e-10);
  EXPECT_LT(max_abs(r1.Gamma - mat({{-2, -3}})), 1e-10);
  const RegulatorSolution r2 = solve_regulator(s.followers[1], s.leader);
  EXPECT_LT(max_abs(r2.Pi - MatrixXd::Identity(2, 2)), 1e-10);
  EXPECT_LT(max_abs(r2.Gamma - mat({{0, 1}})), 1e-10);
  const RegulatorSolution r3 = solve_regulator(s.followers[2], s.leader);
  EXPECT_LT(max_abs(r3.Pi - MatrixXd::Identity(2, 2)), 1e-10);
  EXPECT_LT(max_abs(r3.Gamma - mat({{1, 3}})), 1e-10);
  const RegulatorSolution r4 = solve_regulator(s.followers[3], s.leader);
  EXPECT_LT(max_abs(r4.Pi - mat({{3.33, -11.66}, {1, 0}, {0, 1}})), 0.01);
  EXPECT_LT(max_abs(r4.Gamma - mat({{-1, -2}})), 0.01);
}

TEST(SolveRegulator, SolutionSatisfiesBothIdentities) {
  const auto& s = seven();
  for (const auto& f : s.followers) {
    const RegulatorSolution r = solve_regulator(f, s.leader);
    EXPECT_LE(max_abs(r.Pi * s.leader.S - f.A * r.Pi - f.B * r.Gamma), 1e-8);
    EXPECT_LE(max_abs(s.leader.D - f.C * r.Pi), 1e-8);
  }
}

TEST(SolveRegulator, UnsolvableIsReported) {
  // y = x with x' = 0 cannot follow a rotating leader.
  const FollowerModel f{mat({{0}}), mat({{0}}), mat({{1}})};
  const LeaderModel l{mat({{0, 1}, {-1, 0}}), mat({{1, 0}})};
  EXPECT_THROW(solve_regulator(f, l), SynthesisError);
}

TEST(FeedforwardGain, Examples) {
  RegulatorSolution r2{MatrixXd::Identity(2, 2), mat({{0, 1}})};
  EXPECT_LT(max_abs(feedforward_gain(r2, mat({{0, 0}})) - mat({{0, 1}})), 1e-15);
  RegulatorSolution r3{MatrixXd::Identity(2, 2), mat({{1, 3}})};
  EXPECT_LT(max_abs(feedforward_gain(r3, mat({{-0.23, 8.61}})) - mat({{1.23, -5.61}})), 1e-12);
  RegulatorSolution r0{MatrixXd::Zero(2, 2), MatrixXd::Zero(1, 2)};
  EXPECT_EQ(max_abs(feedforward_gain(r0, mat({{3, -7}}))), 0.0);
  EXPECT_THROW(feedforward_gain(r3, mat({{1, 2, 3}})), ValidationError);
}

namespace {

// Scalar toy: x' = u, y = x; leader omega' = 0, y0 = omega; one edge.
struct Toy {
  std::vector<FollowerModel> f{{mat({{0}}), mat({{1}}), mat({{1}})}};
  LeaderModel l{mat({{0}}), mat({{1}})};
  Graph g = build_graph(1, 1, {{2, 1, 1.0}});
  LoopGains gains{{mat({{-1}})}, {mat({{1}})}, {mat({{1}})}, {1.0}, 1.0};
};

}  // namespace

TEST(ClosedLoop, ScalarToyMatchesHandAssembly) {
  Toy t;
  const ClosedLoop cl = closed_loop_matrices(t.f, t.l, t.g, t.gains);
  EXPECT_LT(max_abs(cl.Ac - mat({{0, -1, 1}, {1, -2, 1}, {0, 0, -1}})), 1e-15);
  EXPECT_LT(max_abs(cl.Bc - mat({{0}, {0}, {1}})), 1e-15);
  EXPECT_LT(max_abs(cl.Cc - mat({{1, 0, 0}})), 1e-15);
  EXPECT_LT(max_abs(cl.Dc - mat({{-1}})), 1e-15);
}

TEST(ClosedLoop, ScalarToyRegulationExact) {
  Toy t;
  const RegulationReport rep =
      verify_output_regulation(closed_loop_matrices(t.f, t.l, t.g, t.gains), t.l, t.g, t.f);
  EXPECT_LT(rep.state_residual, 1e-14);
  EXPECT_LT(rep.output_residual, 1e-14);
  EXPECT_LT(max_abs(rep.Xc - MatrixXd::Ones(3, 1)), 1e-14);
  EXPECT_TRUE(rep.hurwitz);
  EXPECT_TRUE(rep.passed);
}

TEST(ClosedLoop, SynthesizedGainsRegulateAndStabilize) {
  const auto& s = seven();
  const GainSet g = synthesize(s);
  const ClosedLoop cl = closed_loop_matrices(s.followers, s.leader, s.graph, g.loop_gains());
  EXPECT_LT(spectral_abscissa(cl.Ac), 0.0);
  const RegulationReport rep = verify_output_regulation(cl, s.leader, s.graph, s.followers);
  EXPECT_LE(rep.state_residual, 1e-6);
  EXPECT_LE(rep.output_residual, 1e-6);
  EXPECT_TRUE(rep.passed);
}

TEST(ClosedLoop, ZeroFeedforwardBreaksRegulation) {
  const auto& s = seven();
  LoopGains lg = synthesize(s).loop_gains();
  for (auto& k2 : lg.K2) k2.setZero();
  const RegulationReport rep =
      verify_output_regulation(closed_loop_matrices(s.followers, s.leader, s.graph, lg), s.leader,
                               s.graph, s.followers);
  EXPECT_GT(rep.state_residual, 1e-3);
  EXPECT_FALSE(rep.passed);
}

TEST(ClosedLoop, RegulationPassesIffBlockIdentityHolds) {
  const auto& s = seven();
  const GainSet g = synthesize(s);
  for (std::size_t i = 0; i <= s.followers.size(); ++i) {
    LoopGains lg = g.loop_gains();
    if (i < s.followers.size()) lg.K2[i](0, 0) += 0.1;  // break one follower
    bool blocks_ok = true;
    for (std::size_t j = 0; j < s.followers.size(); ++j) {
      const auto& f = s.followers[j];
      const RegulatorSolution reg = solve_regulator(f, s.leader);
      const MatrixXd lhs = (f.A + f.B * lg.K1[j]) * reg.Pi + f.B * lg.K2[j];
      blocks_ok = blocks_ok && max_abs(lhs - reg.Pi * s.leader.S) <= 1e-8;
      EXPECT_NEAR(regulation_identity_residual(f, s.leader, reg, lg.K1[j], lg.K2[j]),
                  (lhs - reg.Pi * s.leader.S).norm(), 1e-12);
    }
    const RegulationReport rep = verify_output_regulation(
        closed_loop_matrices(s.followers, s.leader, s.graph, lg), s.leader, s.graph, s.followers);
    EXPECT_EQ(rep.passed, blocks_ok) << "perturbed follower " << i + 1;
    EXPECT_EQ(blocks_ok, i == s.followers.size());
  }
}

TEST(CheckDimensions, NamesTheOffendingFollower) {
  auto f = seven().followers;
  f[2].B = MatrixXd::Ones(3, 1);
  try {
    check_dimensions(f, seven().leader);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("follower 3"), std::string::npos) << e.what();
  }
}
