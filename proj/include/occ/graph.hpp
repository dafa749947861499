#pragma once

// Leader/follower communication topology. Node ids are 1-based with the n
// followers first and the m leaders last; an edge (from -> to) means `to`
// receives information from `from` with weight a_{to,from} > 0.

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace occ {

struct Edge {
  int from = 0;
  int to = 0;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

struct Graph {
  int n_followers = 0;
  int m_leaders = 0;
  std::vector<Edge> edges;

  int node_count() const { return n_followers + m_leaders; }
  bool is_leader(int id) const { return id > n_followers; }

  /// Weighted adjacency, row = receiving node (0-based).
  Eigen::MatrixXd adjacency() const;
  /// Full (n+m) x (n+m) Laplacian; the leader rows are zero.
  Eigen::MatrixXd laplacian() const;
  /// Delta^k: diag(a_{i,k}) over followers, for leader id k.
  Eigen::MatrixXd leader_weights(int leader_id) const;

  bool operator==(const Graph&) const = default;
};

/// Rejects out-of-range ids, non-positive weights, duplicates, self-loops,
/// edges into leaders and directed cycles.
Graph build_graph(int n_followers, int m_leaders, std::vector<Edge> edges);

struct TopologyReport {
  bool acyclic = false;
  bool leader_reachable = false;
  std::vector<int> unreachable_followers;  // 1-based ids

  bool ok() const { return acyclic && leader_reachable; }
};

TopologyReport validate_topology(const Graph& g);

struct LaplacianPartition {
  Eigen::MatrixXd L1;                   // n x n
  Eigen::MatrixXd L2;                   // n x m
  Eigen::MatrixXd containment_weights;  // -L1^{-1} L2, rows are convex weights
};

/// Throws ValidationError when L1 is singular (a validation bypass).
LaplacianPartition laplacian_partition(const Graph& g);

struct Relabeling {
  Graph graph;
  /// order[new_index] = old_index, 0-based over followers. Leaders keep ids.
  std::vector<int> order;
};

/// Topological relabeling of the followers so that L1 is lower triangular.
Relabeling relabel_topological(const Graph& g);

/// Random graph satisfying every build_graph rule and leader reachability:
/// followers in a random order, each edge to a later follower with
/// probability p_edge, at least one in-edge per follower, weights in
/// [0.1, 5].
Graph random_valid_graph(std::mt19937_64& rng, int n_followers, int m_leaders,
                         double p_edge = 0.3);

/// Undo a relabeling: old follower index of each new one, applied to ids.
Graph restore_labels(const Relabeling& r);

}  // namespace occ
