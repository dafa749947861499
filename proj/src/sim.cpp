#include "occ/sim.hpp"

#include <cmath>
#include <limits>

#include "occ/errors.hpp"

namespace occ {

Eigen::Index StateLayout::add(const std::string& name, Eigen::Index size) {
  if (contains(name)) throw std::invalid_argument("duplicate state slice " + name);
  slices_.push_back({name, size_, size});
  size_ += size;
  return slices_.back().offset;
}

bool StateLayout::contains(const std::string& name) const {
  for (const auto& s : slices_) {
    if (s.name == name) return true;
  }
  return false;
}

const StateLayout::Slice& StateLayout::at(const std::string& name) const {
  for (const auto& s : slices_) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no state slice named " + name);
}

const std::string& StateLayout::locate(Eigen::Index k) const {
  for (const auto& s : slices_) {
    if (k >= s.offset && k < s.offset + s.size) return s.name;
  }
  throw std::out_of_range("state index out of range");
}

Eigen::VectorBlock<VectorXd> StateLayout::view(VectorXd& x, const std::string& name) const {
  const Slice& s = at(name);
  return x.segment(s.offset, s.size);
}

Eigen::VectorBlock<const VectorXd> StateLayout::view(const VectorXd& x,
                                                     const std::string& name) const {
  const Slice& s = at(name);
  return x.segment(s.offset, s.size);
}

void Rk4::step(const Rhs& f, double t, VectorXd& x, double h) {
  f(t, x, k1_);
  tmp_ = x + 0.5 * h * k1_;
  f(t + 0.5 * h, tmp_, k2_);
  tmp_ = x + 0.5 * h * k2_;
  f(t + 0.5 * h, tmp_, k3_);
  tmp_ = x + h * k3_;
  f(t + h, tmp_, k4_);
  x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

IntegrationResult integrate(const Rhs& f, VectorXd x0, double h, double t_final, int log_every,
                            const StateLayout* layout, const StepHook& hook) {
  if (!(h > 0.0) || !(t_final >= 0.0)) throw std::invalid_argument("integrate: need h > 0");
  const long steps = std::lround(t_final / h);
  IntegrationResult out;
  VectorXd x = std::move(x0);
  Rk4 rk(x.size());
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * h;
    if (hook) hook(k, t, x);
    if (log_every > 0 && (k % log_every == 0 || k == steps)) {
      out.t.push_back(t);
      out.x.push_back(x);
    }
    if (k == steps) break;
    rk.step(f, t, x, h);
    if (!x.allFinite()) {
      Eigen::Index bad = 0;
      while (bad < x.size() && std::isfinite(x(bad))) ++bad;
      std::string msg = "non-finite state at t = " + std::to_string(t + h);
      if (layout) msg += " in slice " + layout->locate(bad);
      throw SimulationError(msg);
    }
  }
  return out;
}

double hull_distance(const VectorXd& y, const std::vector<VectorXd>& vertices) {
  const auto m = static_cast<int>(vertices.size());
  if (m == 0) throw std::invalid_argument("hull_distance: no vertices");
  if (m > 16) throw std::invalid_argument("hull_distance: at most 16 vertices supported");
  double best = std::numeric_limits<double>::infinity();
  // The minimiser lies in the relative interior of some face; on that face
  // it is the affine least-squares point, so enumerating supports is exact.
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> idx;
    for (int k = 0; k < m; ++k) {
      if (mask & (1u << k)) idx.push_back(k);
    }
    const auto s = static_cast<Eigen::Index>(idx.size());
    MatrixXd v(y.size(), s);
    for (Eigen::Index j = 0; j < s; ++j) v.col(j) = vertices[idx[j]];
    VectorXd lambda;
    if (s == 1) {
      lambda = VectorXd::Ones(1);
    } else {
      MatrixXd kkt = MatrixXd::Zero(s + 1, s + 1);
      kkt.topLeftCorner(s, s) = v.transpose() * v;
      kkt.topRightCorner(s, 1).setOnes();
      kkt.bottomLeftCorner(1, s).setOnes();
      VectorXd rhs(s + 1);
      rhs << v.transpose() * y, 1.0;
      lambda = kkt.completeOrthogonalDecomposition().solve(rhs).head(s);
      if (lambda.minCoeff() < -1e-9 || std::abs(lambda.sum() - 1.0) > 1e-9) continue;
    }
    best = std::min(best, (y - v * lambda).norm());
  }
  return best;
}

ContainmentError containment_error(const VectorXd& YF, const VectorXd& YR,
                                   const LaplacianPartition& lap) {
  const Eigen::Index n = lap.L1.rows();
  const Eigen::Index m = lap.L2.cols();
  const Eigen::Index q = YF.size() / n;
  if (YF.size() != n * q || YR.size() != m * q) {
    throw std::invalid_argument("containment_error: stacked output sizes do not match the graph");
  }
  const MatrixXd iq = MatrixXd::Identity(q, q);
  ContainmentError out;
  out.e = kron(lap.L1, iq) * YF + kron(lap.L2, iq) * YR;
  out.ebar = YF - kron(lap.containment_weights, iq) * YR;
  std::vector<VectorXd> leaders(m);
  for (Eigen::Index k = 0; k < m; ++k) leaders[k] = YR.segment(k * q, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd yi = YF.segment(i * q, q);
    out.hull_distance.push_back(hull_distance(yi, leaders));
    std::vector<VectorXd> reachable;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (lap.containment_weights(i, k) > 1e-12) reachable.push_back(leaders[k]);
    }
    out.hull_distance_reachable.push_back(hull_distance(yi, reachable));
  }
  return out;
}

bool LearningOutcome::all_converged() const {
  for (const auto& f : followers) {
    if (!f.learning.converged) return false;
  }
  return !followers.empty();
}

namespace {

enum class Phase { Fixed, Behaviour, Learned };

struct FollowerPolicy {
  Phase phase = Phase::Fixed;
  MatrixXd K1, K2;  // Fixed / Learned: u = K1 xi + K2 eta
  MatrixXd Kb;      // Behaviour: u = Kb [xi; eta] + noise(t)
  ExplorationNoise noise;
  bool collecting = false;
  double interval_start = 0.0;
  VectorXd x_start;
};

struct Snapshot {
  std::vector<VectorXd> x, omega, xi;
  std::vector<AdaptiveEstimate> est;
};

// Everything the right-hand side and the hook share for one run.
class Loop {
 public:
  Loop(const Scenario& s, const GainSet& g, RunMode mode)
      : s_(s), g_(g), mode_(mode), lap_(laplacian_partition(s.graph)),
        adaptive_(s.observers.kind == LeaderObserverKind::Adaptive), n_(s.followers.size()),
        m_(static_cast<std::size_t>(s.graph.m_leaders)), r_(s.leader.states()),
        q_(s.leader.outputs()) {
    for (std::size_t i = 0; i < n_; ++i) layout_.add(name("x", i + 1), s.followers[i].states());
    for (std::size_t k = 0; k < m_; ++k) layout_.add(name("omega", n_ + k + 1), r_);
    for (std::size_t i = 0; i < n_; ++i) layout_.add(name("xi", i + 1), s.followers[i].states());
    for (std::size_t i = 0; i < n_; ++i) layout_.add(name("eta", i + 1), r_);
    if (adaptive_) {
      for (std::size_t i = 0; i < n_; ++i) layout_.add(name("S", i + 1), r_ * r_);
      for (std::size_t i = 0; i < n_; ++i) layout_.add(name("D", i + 1), q_ * r_);
    }
    if (mode_ == RunMode::Learning) {
      for (std::size_t i = 0; i < n_; ++i) {
        const Eigen::Index d = s.followers[i].states() + r_;
        layout_.add(name("acc", i + 1), IntervalAccumulator::size(d, s.followers[i].inputs()));
      }
    }
    policy_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      policy_[i].K1 = g.followers[i].K1;
      policy_[i].K2 = g.followers[i].K2;
    }
  }

  static std::string name(const char* base, std::size_t id) { return base + std::to_string(id); }
  const StateLayout& layout() const { return layout_; }
  std::vector<FollowerPolicy>& policy() { return policy_; }
  const LaplacianPartition& lap() const { return lap_; }

  VectorXd initial_state(const std::vector<VectorXd>& x0) const {
    VectorXd x = VectorXd::Zero(layout_.size());
    const auto& init = s_.observers.initial;
    for (std::size_t i = 0; i < n_; ++i) {
      layout_.view(x, name("x", i + 1)) = x0[i];
      if (!init.xi.empty()) layout_.view(x, name("xi", i + 1)) = init.xi[i];
      if (!init.eta.empty()) layout_.view(x, name("eta", i + 1)) = init.eta[i];
      if (adaptive_ && !init.S.empty()) layout_.view(x, name("S", i + 1)) = vec(init.S[i]);
      if (adaptive_ && !init.D.empty()) layout_.view(x, name("D", i + 1)) = vec(init.D[i]);
    }
    for (std::size_t k = 0; k < m_; ++k) {
      layout_.view(x, name("omega", n_ + k + 1)) = s_.leader_initial[k];
    }
    return x;
  }

  Snapshot unpack(const VectorXd& x) const {
    Snapshot snap;
    for (std::size_t i = 0; i < n_; ++i) {
      snap.x.push_back(layout_.view(x, name("x", i + 1)));
      snap.xi.push_back(layout_.view(x, name("xi", i + 1)));
      AdaptiveEstimate e;
      e.eta_hat = layout_.view(x, name("eta", i + 1));
      if (adaptive_) {
        e.S = unvec(layout_.view(x, name("S", i + 1)), r_, r_);
        e.D = unvec(layout_.view(x, name("D", i + 1)), q_, r_);
      } else {
        e.S = s_.leader.S;
        e.D = s_.leader.D;
      }
      snap.est.push_back(std::move(e));
    }
    for (std::size_t k = 0; k < m_; ++k) snap.omega.push_back(layout_.view(x, name("omega", n_ + k + 1)));
    return snap;
  }

  VectorXd augmented(const Snapshot& snap, std::size_t i) const {
    VectorXd xh(snap.xi[i].size() + r_);
    xh << snap.xi[i], snap.est[i].eta_hat;
    return xh;
  }

  VectorXd control(double t, const Snapshot& snap, std::size_t i) const {
    const FollowerPolicy& p = policy_[i];
    if (p.phase == Phase::Behaviour) return p.Kb * augmented(snap, i) + p.noise(t);
    return p.K1 * snap.xi[i] + p.K2 * snap.est[i].eta_hat;
  }

  std::vector<VectorXd> controls(double t, const Snapshot& snap) const {
    std::vector<VectorXd> u;
    for (std::size_t i = 0; i < n_; ++i) u.push_back(control(t, snap, i));
    return u;
  }

  void rhs(double t, const VectorXd& x, VectorXd& dx) const {
    const Snapshot snap = unpack(x);
    const std::vector<VectorXd> u = controls(t, snap);
    std::vector<VectorXd> y(n_), y_leader(m_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = s_.followers[i].C * snap.x[i];
    for (std::size_t k = 0; k < m_; ++k) y_leader[k] = s_.leader.D * snap.omega[k];

    for (std::size_t i = 0; i < n_; ++i) {
      const auto& f = s_.followers[i];
      layout_.view(dx, name("x", i + 1)) = f.A * snap.x[i] + f.B * u[i];
    }
    for (std::size_t k = 0; k < m_; ++k) {
      layout_.view(dx, name("omega", n_ + k + 1)) = s_.leader.S * snap.omega[k];
    }

    const std::vector<VectorXd> rel = relative_outputs(s_.graph, y, y_leader);
    const std::vector<VectorXd> dxi =
        state_observer_rhs(s_.graph, s_.followers, g_.observer_gains(), snap.xi, u, rel, y_leader);
    for (std::size_t i = 0; i < n_; ++i) layout_.view(dx, name("xi", i + 1)) = dxi[i];

    if (adaptive_) {
      const LeaderBroadcast lb{s_.leader.S, s_.leader.D, snap.omega};
      const auto d = adaptive_observer_rhs(s_.graph, snap.est, lb, g_.couplings);
      for (std::size_t i = 0; i < n_; ++i) {
        layout_.view(dx, name("eta", i + 1)) = d[i].eta_hat;
        layout_.view(dx, name("S", i + 1)) = vec(d[i].S);
        layout_.view(dx, name("D", i + 1)) = vec(d[i].D);
      }
    } else {
      std::vector<VectorXd> eta;
      for (const auto& e : snap.est) eta.push_back(e.eta_hat);
      const auto d = static_observer_rhs(s_.graph, eta, s_.leader.S, snap.omega, g_.beta);
      for (std::size_t i = 0; i < n_; ++i) layout_.view(dx, name("eta", i + 1)) = d[i];
    }

    if (mode_ == RunMode::Learning) {
      for (std::size_t i = 0; i < n_; ++i) {
        auto out = layout_.view(dx, name("acc", i + 1));
        if (!policy_[i].collecting) {
          out.setZero();
          continue;
        }
        const VectorXd z = s_.followers[i].C * snap.xi[i] - snap.est[i].y0();
        VectorXd buf(out.size());
        IntervalAccumulator::rhs(s_.weights.gamma[i], t - policy_[i].interval_start,
                                 augmented(snap, i), u[i], z, s_.weights.Q[i], buf);
        out = buf;
      }
    }
  }

 private:
  const Scenario& s_;
  const GainSet& g_;
  RunMode mode_;
  LaplacianPartition lap_;
  bool adaptive_;
  std::size_t n_, m_;
  Eigen::Index r_, q_;
  StateLayout layout_;
  std::vector<FollowerPolicy> policy_;
};

VectorXd stack(const std::vector<VectorXd>& parts) {
  Eigen::Index size = 0;
  for (const auto& p : parts) size += p.size();
  VectorXd out(size);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.segment(off, p.size()) = p;
    off += p.size();
  }
  return out;
}

}  // namespace

SimulationResult run_scenario(const Scenario& s, const RunOptions& opts) {
  check_scenario(s);
  SimulationResult res;
  res.gains = synthesize(s);
  if (opts.zero_feedforward) {
    for (auto& f : res.gains.followers) f.K2.setZero();
  }
  const std::size_t n = s.followers.size();
  const Eigen::Index r = s.leader.states();
  Loop loop(s, res.gains, opts.mode);
  res.layout = loop.layout();
  res.follower_initial = follower_initial_states(s);

  const double h = s.sim.h;
  long steps_per_interval = 0;
  std::vector<int> samples;
  std::vector<MatrixXd> K0;
  LearnerOptions lopts;
  if (opts.mode == RunMode::Learning) {
    const double ratio = s.learner.T / h;
    steps_per_interval = std::lround(ratio);
    if (steps_per_interval < 1 || std::abs(ratio - steps_per_interval) > 1e-9 * ratio) {
      throw ValidationError("learner.T must be an integer multiple of sim.h");
    }
    samples = sample_counts(s);
    K0 = initial_gains(s);
    lopts.tau = s.learner.tau;
    lopts.max_iterations = s.learner.max_iter;
    res.learning.emplace();
    res.learning->followers.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& p = loop.policy()[i];
      p.phase = Phase::Behaviour;
      p.Kb = K0[i];
      p.noise = ExplorationNoise(s.followers[i].inputs(), s.learner.noise.amplitude,
                                 s.learner.noise.seed + i);
      res.learning->followers[i].K_model = res.gains.followers[i].optimal.Kbar;
    }
  }

  Trajectory& traj = res.trajectory;
  traj.h = h;
  traj.log_every = s.sim.log_every;
  const long total_steps = std::lround(s.sim.t_final / h);
  bool gate_open = false;
  double window_max = 0.0;
  std::vector<ObserverErrors> logged_errors;

  auto learning_step = [&](long k, double t, VectorXd& x, const Snapshot& snap,
                           const ObserverErrors& err) {
    LearningOutcome& lo = *res.learning;
    window_max = std::max(window_max, err.max());
    if (k % steps_per_interval != 0) return;
    auto begin_interval = [&](std::size_t i) {
      auto& p = loop.policy()[i];
      p.interval_start = t;
      p.x_start = loop.augmented(snap, i);
      loop.layout().view(x, Loop::name("acc", i + 1)).setZero();
    };
    if (!gate_open) {
      if (k > 0 && window_max < s.learner.gate) {
        gate_open = true;
        lo.gate_time = t;
        for (std::size_t i = 0; i < n; ++i) {
          loop.policy()[i].collecting = true;
          lo.followers[i].collection_start = t;
          begin_interval(i);
        }
      }
      window_max = 0.0;
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto& p = loop.policy()[i];
      if (!p.collecting) continue;
      FollowerLearning& fl = lo.followers[i];
      const Eigen::Index d = s.followers[i].states() + r;
      fl.records.push_back(IntervalAccumulator::unpack(loop.layout().view(x, Loop::name("acc", i + 1)),
                                                       d, s.followers[i].inputs(), s.learner.T,
                                                       p.x_start, loop.augmented(snap, i)));
      begin_interval(i);
      if (static_cast<int>(fl.records.size()) < samples[i]) continue;
      fl.learning = run_off_policy(fl.records, K0[i], s.weights.W[i], s.weights.gamma[i], lopts);
      if (!fl.learning.failure.empty() &&
          static_cast<int>(fl.records.size()) < 4 * samples[i]) {
        continue;  // ill-conditioned: gather more intervals and retry
      }
      p.collecting = false;
      if (!fl.learning.converged) continue;
      const MatrixXd K = fl.learning.final_gain();
      fl.gain_error = (K - fl.K_model).cwiseAbs().maxCoeff();
      const Eigen::Index ni = s.followers[i].states();
      p.K1 = K.leftCols(ni);
      if (opts.zero_feedforward) {
        p.K2 = MatrixXd::Zero(K.rows(), r);
      } else if (s.feedforward == FeedforwardMode::Optimal) {
        p.K2 = K.rightCols(r);
      } else {
        // Regulator solution from the follower's own model and its current
        // estimates of the leader dynamics.
        const LeaderModel estimated{snap.est[i].S, snap.est[i].D};
        p.K2 = feedforward_gain(regulator_least_squares(s.followers[i], estimated), p.K1);
      }
      fl.K_applied.resize(K.rows(), K.cols());
      fl.K_applied << p.K1, p.K2;
      fl.switch_time = t;
      p.phase = Phase::Learned;
    }
  };

  auto hook = [&](long k, double t, VectorXd& x) {
    const bool log_now = k % s.sim.log_every == 0 || k == total_steps;
    if (opts.mode != RunMode::Learning && !log_now) return;
    const Snapshot snap = loop.unpack(x);
    if (opts.mode == RunMode::Learning && (log_now || !gate_open)) {
      const ObserverErrors err =
          observer_errors(snap.x, snap.xi, snap.est, convex_targets(loop.lap(), snap.omega), s.leader);
      learning_step(k, t, x, snap, err);
    } else if (opts.mode == RunMode::Learning) {
      learning_step(k, t, x, snap, ObserverErrors{});
    }
    if (!log_now) return;

    const Snapshot cur = loop.unpack(x);
    std::vector<VectorXd> y(n), yhat(n), y0(n), u = loop.controls(t, cur), yl;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = s.followers[i].C * cur.x[i];
      yhat[i] = s.followers[i].C * cur.xi[i];
      y0[i] = cur.est[i].y0();
    }
    for (const auto& w : cur.omega) yl.push_back(s.leader.D * w);
    ContainmentError ce = containment_error(stack(y), stack(yl), loop.lap());
    const Eigen::Index q = s.leader.outputs();
    std::vector<VectorXd> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = ce.e.segment(static_cast<Eigen::Index>(i) * q, q);

    traj.t.push_back(t);
    traj.y.push_back(std::move(y));
    traj.yhat.push_back(std::move(yhat));
    traj.y0.push_back(std::move(y0));
    traj.u.push_back(std::move(u));
    traj.e.push_back(std::move(e));
    traj.leader_y.push_back(std::move(yl));
    traj.e_stacked.push_back(ce.e);
    traj.ebar_stacked.push_back(ce.ebar);
    traj.containment.push_back(std::move(ce));
    logged_errors.push_back(
        observer_errors(cur.x, cur.xi, cur.est, convex_targets(loop.lap(), cur.omega), s.leader));
    if (opts.keep_states) traj.states.push_back(x);
  };

  // A gate window needs errors at every step, not only at log steps.
  Rhs rhs = [&loop](double t, const VectorXd& x, VectorXd& dx) { loop.rhs(t, x, dx); };
  integrate(rhs, loop.initial_state(res.follower_initial), h, s.sim.t_final, 0, &res.layout, hook);
  traj.errors = logged_errors;

  res.observer_report = observer_error_report(traj.t, logged_errors);
  res.e_initial = traj.e_stacked.front().norm();
  res.e_final = traj.e_stacked.back().norm();
  res.hull_final = traj.containment.back().hull_distance_reachable;
  return res;
}

Rhs static_loop_rhs(const Scenario& s, const GainSet& gains) {
  const std::size_t n = s.followers.size();
  const std::size_t m = static_cast<std::size_t>(s.graph.m_leaders);
  const Eigen::Index r = s.leader.states();
  std::vector<Eigen::Index> off_x(n), off_xi(n);
  Eigen::Index N = 0;
  for (std::size_t i = 0; i < n; ++i) {
    off_x[i] = N;
    N += s.followers[i].states();
  }
  for (std::size_t i = 0; i < n; ++i) off_xi[i] = N + off_x[i];
  const Eigen::Index off_eta = 2 * N;
  const Eigen::Index off_omega = off_eta + static_cast<Eigen::Index>(n) * r;

  return [=, &s](double, const VectorXd& x, VectorXd& dx) {
    std::vector<VectorXd> xs(n), xis(n), etas(n), omegas(m), u(n), y(n), yl(m);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Index ni = s.followers[i].states();
      xs[i] = x.segment(off_x[i], ni);
      xis[i] = x.segment(off_xi[i], ni);
      etas[i] = x.segment(off_eta + static_cast<Eigen::Index>(i) * r, r);
      u[i] = gains.followers[i].K1 * xis[i] + gains.followers[i].K2 * etas[i];
      y[i] = s.followers[i].C * xs[i];
    }
    for (std::size_t k = 0; k < m; ++k) {
      omegas[k] = x.segment(off_omega + static_cast<Eigen::Index>(k) * r, r);
      yl[k] = s.leader.D * omegas[k];
    }
    const auto rel = relative_outputs(s.graph, y, yl);
    const auto dxi = state_observer_rhs(s.graph, s.followers, gains.observer_gains(), xis, u, rel, yl);
    const auto deta = static_observer_rhs(s.graph, etas, s.leader.S, omegas, gains.beta);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Index ni = s.followers[i].states();
      dx.segment(off_x[i], ni) = s.followers[i].A * xs[i] + s.followers[i].B * u[i];
      dx.segment(off_xi[i], ni) = dxi[i];
      dx.segment(off_eta + static_cast<Eigen::Index>(i) * r, r) = deta[i];
    }
    for (std::size_t k = 0; k < m; ++k) {
      dx.segment(off_omega + static_cast<Eigen::Index>(k) * r, r) = s.leader.S * omegas[k];
    }
  };
}

}  // namespace occ
