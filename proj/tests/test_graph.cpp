#include <gtest/gtest.h>

#include <queue>
#include <random>

#include "occ/errors.hpp"
#include "occ/graph.hpp"
#include "occ/scenario.hpp"
#include "test_util.hpp"

using namespace occ;
using testutil::max_abs;

namespace {

Graph seven_agent() {
  return build_graph(4, 3, {{5, 1, 1}, {6, 1, 1}, {5, 2, 1}, {6, 2, 1}, {5, 3, 1}, {6, 3, 1},
                            {7, 3, 1}, {5, 4, 1}, {6, 4, 1}, {7, 4, 1}});
}

// Breadth-first search from all leaders, independent of the library.
std::vector<bool> reachable(const Graph& g) {
  std::vector<bool> seen(g.node_count() + 1, false);
  std::queue<int> q;
  for (int k = g.n_followers + 1; k <= g.node_count(); ++k) {
    seen[k] = true;
    q.push(k);
  }
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (const Edge& e : g.edges) {
      if (e.from == v && !seen[e.to]) {
        seen[e.to] = true;
        q.push(e.to);
      }
    }
  }
  return seen;
}

}  // namespace

TEST(BuildGraph, AcceptsSevenAgentTopology) {
  const Graph g = seven_agent();
  EXPECT_EQ(g.n_followers, 4);
  EXPECT_EQ(g.m_leaders, 3);
  EXPECT_EQ(g.edges.size(), 10u);
  EXPECT_EQ(g, paper_scenario().graph);
}

TEST(BuildGraph, AcceptsSmallestTopology) {
  EXPECT_NO_THROW(build_graph(1, 1, {{2, 1, 1.0}}));
}

TEST(BuildGraph, RejectsFollowerCycle) {
  EXPECT_THROW(build_graph(2, 1, {{1, 2, 1}, {2, 1, 1}}), ValidationError);
}

TEST(BuildGraph, RejectsMalformedEdges) {
  EXPECT_THROW(build_graph(1, 1, {{2, 1, 0.0}}), ValidationError);
  EXPECT_THROW(build_graph(1, 1, {{2, 1, -1.0}}), ValidationError);
  EXPECT_THROW(build_graph(1, 1, {{1, 1, 1.0}}), ValidationError);
  EXPECT_THROW(build_graph(1, 1, {{1, 2, 1.0}}), ValidationError);
  EXPECT_THROW(build_graph(1, 1, {{3, 1, 1.0}}), ValidationError);
  EXPECT_THROW(build_graph(1, 1, {{2, 1, 1.0}, {2, 1, 2.0}}), ValidationError);
}

TEST(ValidateTopology, SevenAgentMatchesSearchOracle) {
  const Graph g = seven_agent();
  const TopologyReport rep = validate_topology(g);
  EXPECT_TRUE(rep.acyclic);
  EXPECT_TRUE(rep.leader_reachable);
  const auto seen = reachable(g);
  for (int i = 1; i <= 4; ++i) EXPECT_TRUE(seen[i]);
}

TEST(ValidateTopology, ChainFromLeader) {
  const TopologyReport rep = validate_topology(build_graph(2, 1, {{3, 2, 1}, {2, 1, 1}}));
  EXPECT_TRUE(rep.ok());
}

TEST(ValidateTopology, IsolatedFollowerUnreachable) {
  const TopologyReport rep = validate_topology(build_graph(2, 1, {{3, 1, 1}}));
  EXPECT_TRUE(rep.acyclic);
  EXPECT_FALSE(rep.leader_reachable);
  ASSERT_EQ(rep.unreachable_followers.size(), 1u);
  EXPECT_EQ(rep.unreachable_followers[0], 2);
}

TEST(LaplacianPartition, SevenAgentValues) {
  const LaplacianPartition lap = laplacian_partition(seven_agent());
  EXPECT_LT(max_abs(lap.L1 - Eigen::Vector4d(2, 2, 3, 3).asDiagonal().toDenseMatrix()), 1e-15);
  const Eigen::MatrixXd& w = lap.containment_weights;
  EXPECT_NEAR(w(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(w(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(w(0, 2), 0.0, 1e-15);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(w(2, k), 1.0 / 3.0, 1e-15);
}

TEST(LaplacianPartition, SingleEdge) {
  const LaplacianPartition lap = laplacian_partition(build_graph(1, 1, {{2, 1, 1}}));
  EXPECT_DOUBLE_EQ(lap.L1(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(lap.containment_weights(0, 0), 1.0);
}

TEST(LaplacianPartition, UnreachableFollowerIsRejected) {
  EXPECT_THROW(laplacian_partition(build_graph(2, 1, {{3, 1, 1}})), ValidationError);
}

TEST(LaplacianPartition, L2FromLeaderWeights) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = random_valid_graph(rng, 6, 3);
    const LaplacianPartition lap = laplacian_partition(g);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.n_followers);
    for (int k = 0; k < g.m_leaders; ++k) {
      const Eigen::VectorXd col = -g.leader_weights(g.n_followers + 1 + k) * ones;
      EXPECT_LT((lap.L2.col(k) - col).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(LaplacianPartition, RandomGraphProperties) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> nd(1, 8), md(1, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const Graph g = random_valid_graph(rng, nd(rng), md(rng));
    ASSERT_TRUE(validate_topology(g).ok());
    const LaplacianPartition lap = laplacian_partition(g);
    EXPECT_GE(lap.containment_weights.minCoeff(), -1e-12);
    const Eigen::VectorXd sums = lap.containment_weights.rowwise().sum();
    EXPECT_LT((sums.array() - 1.0).abs().maxCoeff(), 1e-10);
    EXPECT_GT(lap.L1.eigenvalues().real().minCoeff(), 0.0);
  }
}

TEST(RelabelTopological, SevenAgentIsIdentity) {
  const Relabeling r = relabel_topological(seven_agent());
  EXPECT_EQ(r.order, (std::vector<int>{0, 1, 2, 3}));
}

TEST(RelabelTopological, PredecessorComesFirst) {
  const Graph g = build_graph(2, 1, {{3, 2, 1}, {2, 1, 1}});
  const Relabeling r = relabel_topological(g);
  EXPECT_EQ(r.order, (std::vector<int>{1, 0}));
  const Eigen::MatrixXd L1 = laplacian_partition(r.graph).L1;
  EXPECT_EQ(L1(0, 1), 0.0);
  EXPECT_EQ(restore_labels(r), g);
}

TEST(RelabelTopological, RandomDagsBecomeLowerTriangular) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = random_valid_graph(rng, 7, 2, 0.4);
    const Relabeling r = relabel_topological(g);
    const Eigen::MatrixXd L1 = laplacian_partition(r.graph).L1;
    EXPECT_EQ(max_abs(L1.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()), 0.0);
    EXPECT_EQ(restore_labels(r), g);
  }
}
