#include "occ/scenario.hpp"

#include <random>

#include "occ/care.hpp"
#include "occ/errors.hpp"
#include "occ/rl.hpp"

namespace occ {

namespace {

bool same(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

template <typename T>
bool same_list(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same(a[i], b[i])) return false;
  }
  return true;
}

MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

VectorXd column(std::initializer_list<double> v) {
  VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void require_shape(const MatrixXd& m, Eigen::Index r, Eigen::Index c, const std::string& what) {
  require(m.rows() == r && m.cols() == c,
          what + " must be " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace

bool operator==(const Scenario& a, const Scenario& b) {
  const auto& oa = a.observers;
  const auto& ob = b.observers;
  const auto& la = a.learner;
  const auto& lb = b.learner;
  std::vector<MatrixXd> fa, fb;
  for (const auto& f : a.followers) fa.insert(fa.end(), {f.A, f.B, f.C});
  for (const auto& f : b.followers) fb.insert(fb.end(), {f.A, f.B, f.C});
  return a.graph == b.graph && same(a.leader.S, b.leader.S) && same(a.leader.D, b.leader.D) &&
         same_list(a.leader_initial, b.leader_initial) && same_list(fa, fb) &&
         same_list(a.follower_initial, b.follower_initial) && oa.mu == ob.mu &&
         same_list(oa.E, ob.E) && same_list(oa.R, ob.R) && oa.beta == ob.beta &&
         oa.beta1 == ob.beta1 && oa.beta2 == ob.beta2 && oa.beta3 == ob.beta3 &&
         oa.kind == ob.kind && same_list(oa.initial.xi, ob.initial.xi) &&
         same_list(oa.initial.eta, ob.initial.eta) && same_list(oa.initial.S, ob.initial.S) &&
         same_list(oa.initial.D, ob.initial.D) && same_list(a.weights.Q, b.weights.Q) &&
         same_list(a.weights.W, b.weights.W) && a.weights.gamma == b.weights.gamma &&
         a.sim.h == b.sim.h && a.sim.t_final == b.sim.t_final && a.sim.seed == b.sim.seed &&
         a.sim.log_every == b.sim.log_every && la.T == lb.T && la.samples == lb.samples &&
         la.tau == lb.tau && la.max_iter == lb.max_iter && la.gate == lb.gate &&
         la.noise.amplitude == lb.noise.amplitude && la.noise.seed == lb.noise.seed &&
         same_list(la.K0, lb.K0) && a.feedforward == b.feedforward;
}

Scenario paper_scenario() {
  Scenario s;
  s.graph = build_graph(4, 3,
                        {{5, 1, 1}, {6, 1, 1}, {5, 2, 1}, {6, 2, 1}, {5, 3, 1},
                         {6, 3, 1}, {7, 3, 1}, {5, 4, 1}, {6, 4, 1}, {7, 4, 1}});
  s.leader.S = rows({{1, -3}, {1, -1}});
  s.leader.D = MatrixXd::Identity(2, 2);
  s.leader_initial = {column({2, 1}), column({-1, 1}), column({0.4, 0.4})};

  const MatrixXd c_wide = rows({{0, 1, 0}, {0, 0, 1}});
  s.followers = {
      {rows({{-1, 0, 0}, {0, 3, 0}, {0, 3, 2}}), column({4, 1, 1}), c_wide},
      {rows({{1, -1}, {1, 0}}), column({-2, -1}), MatrixXd::Identity(2, 2)},
      {rows({{2, 0}, {2, 2}}), column({-1, -1}), MatrixXd::Identity(2, 2)},
      {rows({{-1, 0, 0}, {0, 2, -1}, {0, 3, 3}}), column({5, 1, 2}), c_wide},
  };

  const MatrixXd e3 = column({2, 1, 1}).asDiagonal();
  s.observers.mu = {1, 1, 1, 1};
  s.observers.E = {e3, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), e3};
  s.observers.R = {rows({{0.19, -0.11}, {-0.11, 0.26}}), rows({{0.33, 0}, {0, 1}}),
                   rows({{0.23, -0.09}, {-0.09, 0.23}}), rows({{0.22, -0.06}, {-0.06, 0.16}})};
  s.observers.beta1 = 3;
  s.observers.beta2 = 10;
  s.observers.beta3 = 3;

  for (int i = 0; i < 4; ++i) {
    s.weights.Q.push_back(10 * MatrixXd::Identity(2, 2));
    s.weights.W.push_back(10 * MatrixXd::Identity(1, 1));
    s.weights.gamma.push_back(0.01);
  }
  s.learner.T = 0.5;
  return s;
}

void check_scenario(const Scenario& s) {
  const std::size_t n = s.followers.size();
  require(static_cast<int>(n) == s.graph.n_followers,
          "followers: " + std::to_string(n) + " models for " +
              std::to_string(s.graph.n_followers) + " graph followers");
  require(static_cast<int>(s.leader_initial.size()) == s.graph.m_leaders,
          "leader.initial_states: need one state per leader");
  check_dimensions(s.followers, s.leader);
  const Eigen::Index r = s.leader.states();
  const Eigen::Index q = s.leader.outputs();
  for (std::size_t k = 0; k < s.leader_initial.size(); ++k) {
    require(s.leader_initial[k].size() == r,
            "leader.initial_states[" + std::to_string(k) + "] has wrong length");
  }
  if (!s.follower_initial.empty()) {
    require(s.follower_initial.size() == n, "followers: initial_state must be given for all or none");
    for (std::size_t i = 0; i < n; ++i) {
      require(s.follower_initial[i].size() == s.followers[i].states(),
              "followers[" + std::to_string(i + 1) + "].initial_state has wrong length");
    }
  }

  const auto& o = s.observers;
  require(o.mu.size() == n && o.E.size() == n && o.R.size() == n,
          "observers: mu, E and R need one entry per follower");
  require(o.beta > 0 && o.beta1 > 0 && o.beta2 > 0 && o.beta3 > 0,
          "observers: beta, beta1, beta2, beta3 must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string who = "observers[" + std::to_string(i + 1) + "].";
    require_shape(o.E[i], s.followers[i].states(), s.followers[i].states(), who + "E");
    require_shape(o.R[i], q, q, who + "R");
  }
  auto check_init = [&](const auto& list, auto rows_of, auto cols_of, const std::string& name) {
    if (list.empty()) return;
    require(list.size() == n, "observers.initial." + name + " must be given for all followers");
    for (std::size_t i = 0; i < n; ++i) {
      require_shape(list[i], rows_of(i), cols_of(i), "observers.initial." + name);
    }
  };
  check_init(o.initial.xi, [&](std::size_t i) { return s.followers[i].states(); },
             [](std::size_t) { return Eigen::Index(1); }, "xi");
  check_init(o.initial.eta, [&](std::size_t) { return r; }, [](std::size_t) { return Eigen::Index(1); },
             "eta");
  check_init(o.initial.S, [&](std::size_t) { return r; }, [&](std::size_t) { return r; }, "S");
  check_init(o.initial.D, [&](std::size_t) { return q; }, [&](std::size_t) { return r; }, "D");

  const auto& w = s.weights;
  require(w.Q.size() == n && w.W.size() == n && w.gamma.size() == n,
          "weights: Q, W and gamma need one entry per follower");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string who = "weights[" + std::to_string(i + 1) + "].";
    require_shape(w.Q[i], q, q, who + "Q");
    require_shape(w.W[i], s.followers[i].inputs(), s.followers[i].inputs(), who + "W");
    require(w.gamma[i] > 0, who + "gamma must be positive");
  }

  require(s.sim.h > 0 && s.sim.t_final > 0, "sim: h and t_final must be positive");
  require(s.sim.log_every >= 1, "sim: log_every must be at least 1");

  const auto& l = s.learner;
  require(l.T > 0 && l.tau > 0 && l.max_iter >= 1 && l.gate > 0,
          "learner: T, tau, gate must be positive and max_iter at least 1");
  require(l.samples.empty() || l.samples.size() == n, "learner.samples: one entry per follower");
  require(l.K0.empty() || l.K0.size() == n, "learner.K0: one entry per follower");
  for (std::size_t i = 0; i < l.K0.size(); ++i) {
    require_shape(l.K0[i], s.followers[i].inputs(), s.followers[i].states() + r,
                  "learner.K0[" + std::to_string(i + 1) + "]");
  }
}

std::vector<VectorXd> follower_initial_states(const Scenario& s) {
  if (!s.follower_initial.empty()) return s.follower_initial;
  std::mt19937_64 rng(s.sim.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<VectorXd> out;
  for (const auto& f : s.followers) {
    VectorXd x(f.states());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = unif(rng);
    out.push_back(x);
  }
  return out;
}

std::vector<MatrixXd> initial_gains(const Scenario& s) {
  if (!s.learner.K0.empty()) return s.learner.K0;
  std::vector<MatrixXd> out;
  const Eigen::Index r = s.leader.states();
  for (const auto& f : s.followers) {
    const MatrixXd q = MatrixXd::Identity(f.states(), f.states());
    const MatrixXd rr = MatrixXd::Identity(f.inputs(), f.inputs());
    const auto lqr = solve_care(f.A, q, f.B, rr);
    MatrixXd k = MatrixXd::Zero(f.inputs(), f.states() + r);
    k.leftCols(f.states()) = -lqr.K;
    out.push_back(k);
  }
  return out;
}

std::vector<int> sample_counts(const Scenario& s) {
  if (!s.learner.samples.empty()) return s.learner.samples;
  std::vector<int> out;
  const Eigen::Index r = s.leader.states();
  for (const auto& f : s.followers) {
    const Eigen::Index d = f.states() + r;
    out.push_back(static_cast<int>(2 * (critic_size(d) + f.inputs() * d)));
  }
  return out;
}

}  // namespace occ
