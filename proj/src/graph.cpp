#include "occ/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

#include "occ/errors.hpp"

namespace occ {

Eigen::MatrixXd Graph::adjacency() const {
  const int total = node_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(total, total);
  for (const auto& e : edges) a(e.to - 1, e.from - 1) = e.weight;
  return a;
}

Eigen::MatrixXd Graph::laplacian() const {
  const Eigen::MatrixXd a = adjacency();
  Eigen::MatrixXd l = -a;
  l.diagonal() += a.rowwise().sum();
  return l;
}

Eigen::MatrixXd Graph::leader_weights(int leader_id) const {
  if (!is_leader(leader_id) || leader_id > node_count()) {
    throw ValidationError("node " + std::to_string(leader_id) + " is not a leader");
  }
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n_followers, n_followers);
  for (const auto& e : edges) {
    if (e.from == leader_id) delta(e.to - 1, e.to - 1) = e.weight;
  }
  return delta;
}

namespace {

// Kahn's algorithm over follower->follower edges; smallest id first so an
// already-sorted labeling maps to the identity.
std::vector<int> follower_topological_order(const Graph& g, bool& acyclic) {
  const int n = g.n_followers;
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> children(n);
  for (const auto& e : g.edges) {
    if (g.is_leader(e.from) || g.is_leader(e.to)) continue;
    children[e.from - 1].push_back(e.to - 1);
    ++indegree[e.to - 1];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int c : children[v]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  acyclic = static_cast<int>(order.size()) == n;
  return order;
}

}  // namespace

Graph build_graph(int n_followers, int m_leaders, std::vector<Edge> edges) {
  if (n_followers < 1 || m_leaders < 1) {
    throw ValidationError("graph needs at least one follower and one leader");
  }
  const int total = n_followers + m_leaders;
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    std::ostringstream where;
    where << "edge " << e.from << "->" << e.to;
    if (e.from < 1 || e.from > total || e.to < 1 || e.to > total) {
      throw ValidationError(where.str() + ": node id out of range 1.." + std::to_string(total));
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError(where.str() + ": weight must be positive and finite");
    }
    if (e.from == e.to) throw ValidationError(where.str() + ": self-loop");
    if (e.to > n_followers) {
      throw ValidationError(where.str() + ": leader node " + std::to_string(e.to) +
                            " cannot receive edges");
    }
    if (!seen.emplace(e.from, e.to).second) {
      throw ValidationError(where.str() + ": duplicate edge");
    }
  }
  Graph g{n_followers, m_leaders, std::move(edges)};
  bool acyclic = false;
  follower_topological_order(g, acyclic);
  if (!acyclic) throw ValidationError("graph contains a directed cycle among followers");
  return g;
}

TopologyReport validate_topology(const Graph& g) {
  TopologyReport report;
  follower_topological_order(g, report.acyclic);

  // Forward search from every leader.
  const int total = g.node_count();
  std::vector<std::vector<int>> children(total);
  for (const auto& e : g.edges) children[e.from - 1].push_back(e.to - 1);
  std::vector<char> reached(total, 0);
  std::vector<int> stack;
  for (int k = g.n_followers; k < total; ++k) {
    reached[k] = 1;
    stack.push_back(k);
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int c : children[v]) {
      if (!reached[c]) {
        reached[c] = 1;
        stack.push_back(c);
      }
    }
  }
  for (int i = 0; i < g.n_followers; ++i) {
    if (!reached[i]) report.unreachable_followers.push_back(i + 1);
  }
  report.leader_reachable = report.unreachable_followers.empty();
  return report;
}

LaplacianPartition laplacian_partition(const Graph& g) {
  const int n = g.n_followers;
  const int m = g.m_leaders;
  const Eigen::MatrixXd l = g.laplacian();
  LaplacianPartition part;
  part.L1 = l.topLeftCorner(n, n);
  part.L2 = l.topRightCorner(n, m);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(part.L1);
  if (!lu.isInvertible()) {
    throw ValidationError("L1 is singular: some follower is not reachable from a leader");
  }
  // Column-wise solve; exact zeros in unreachable leader columns survive.
  part.containment_weights = lu.solve(-part.L2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_sum = part.containment_weights.row(i).sum();
    if (std::abs(row_sum - 1.0) > 1e-10) {
      throw ValidationError("containment weights of follower " + std::to_string(i + 1) +
                            " do not sum to one");
    }
  }
  return part;
}

Relabeling relabel_topological(const Graph& g) {
  bool acyclic = false;
  std::vector<int> order = follower_topological_order(g, acyclic);
  if (!acyclic) throw ValidationError("cannot relabel: graph has a directed cycle");
  std::vector<int> new_of_old(g.n_followers);
  for (int k = 0; k < g.n_followers; ++k) new_of_old[order[k]] = k;
  auto map_id = [&](int id) { return g.is_leader(id) ? id : new_of_old[id - 1] + 1; };
  Graph out{g.n_followers, g.m_leaders, {}};
  out.edges.reserve(g.edges.size());
  for (const auto& e : g.edges) out.edges.push_back({map_id(e.from), map_id(e.to), e.weight});
  return {std::move(out), std::move(order)};
}

Graph random_valid_graph(std::mt19937_64& rng, int n_followers, int m_leaders, double p_edge) {
  std::vector<int> perm(n_followers);
  for (int i = 0; i < n_followers; ++i) perm[i] = i + 1;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> coin(0.0, 1.0), weight(0.1, 5.0);
  std::uniform_int_distribution<int> pick_leader(n_followers + 1, n_followers + m_leaders);
  std::vector<Edge> edges;
  for (int a = 0; a < n_followers; ++a) {
    bool has_input = false;
    for (int k = n_followers + 1; k <= n_followers + m_leaders; ++k) {
      if (coin(rng) < p_edge) {
        edges.push_back({k, perm[a], weight(rng)});
        has_input = true;
      }
    }
    for (int b = 0; b < a; ++b) {
      if (coin(rng) < p_edge) {
        edges.push_back({perm[b], perm[a], weight(rng)});
        has_input = true;
      }
    }
    // Earlier followers are all leader-reachable, so any in-edge suffices.
    if (!has_input) edges.push_back({pick_leader(rng), perm[a], weight(rng)});
  }
  return build_graph(n_followers, m_leaders, std::move(edges));
}

Graph restore_labels(const Relabeling& r) {
  const Graph& g = r.graph;
  auto map_id = [&](int id) { return g.is_leader(id) ? id : r.order[id - 1] + 1; };
  Graph out{g.n_followers, g.m_leaders, {}};
  for (const auto& e : g.edges) out.edges.push_back({map_id(e.from), map_id(e.to), e.weight});
  return out;
}

}  // namespace occ
