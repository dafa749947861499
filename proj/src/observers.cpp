#include "occ/observers.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "occ/errors.hpp"

namespace occ {

std::vector<VectorXd> relative_outputs(const Graph& g, const std::vector<VectorXd>& y_followers,
                                       const std::vector<VectorXd>& y_leaders) {
  auto output = [&](int id) -> const VectorXd& {
    return g.is_leader(id) ? y_leaders[id - g.n_followers - 1] : y_followers[id - 1];
  };
  std::vector<VectorXd> rel;
  rel.reserve(g.edges.size());
  for (const auto& e : g.edges) rel.push_back(output(e.from) - output(e.to));
  return rel;
}

std::vector<VectorXd> state_observer_rhs(const Graph& g, const std::vector<FollowerModel>& f,
                                         const StateObserverGains& gains,
                                         const std::vector<VectorXd>& xi,
                                         const std::vector<VectorXd>& u,
                                         const std::vector<VectorXd>& relative,
                                         const std::vector<VectorXd>& leader_broadcast) {
  const std::size_t n = f.size();
  std::vector<VectorXd> yhat(n);
  for (std::size_t i = 0; i < n; ++i) yhat[i] = f[i].C * xi[i];

  std::vector<VectorXd> innovation(n);
  for (std::size_t i = 0; i < n; ++i) innovation[i] = VectorXd::Zero(f[i].outputs());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& edge = g.edges[e];
    const int i = edge.to - 1;
    const VectorXd& src_estimate = g.is_leader(edge.from)
                                       ? leader_broadcast[edge.from - g.n_followers - 1]
                                       : yhat[edge.from - 1];
    innovation[i] += edge.weight * (relative[e] + yhat[i] - src_estimate);
  }

  std::vector<VectorXd> dxi(n);
  for (std::size_t i = 0; i < n; ++i) {
    dxi[i] = f[i].A * xi[i] + f[i].B * u[i] - gains.mu[i] * gains.F[i] * innovation[i];
  }
  return dxi;
}

std::vector<AdaptiveEstimate> adaptive_observer_rhs(const Graph& g,
                                                    const std::vector<AdaptiveEstimate>& est,
                                                    const LeaderBroadcast& leaders,
                                                    const AdaptiveCouplings& c) {
  const std::size_t n = est.size();
  std::vector<AdaptiveEstimate> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i].eta_hat = VectorXd::Zero(est[i].eta_hat.size());
    d[i].S = MatrixXd::Zero(est[i].S.rows(), est[i].S.cols());
    d[i].D = MatrixXd::Zero(est[i].D.rows(), est[i].D.cols());
  }
  for (const auto& e : g.edges) {
    const int i = e.to - 1;
    const AdaptiveEstimate& self = est[i];
    if (g.is_leader(e.from)) {
      d[i].eta_hat += e.weight * (leaders.omega[e.from - g.n_followers - 1] - self.eta_hat);
      d[i].S += e.weight * (leaders.S - self.S);
      d[i].D += e.weight * (leaders.D - self.D);
    } else {
      const AdaptiveEstimate& nb = est[e.from - 1];
      d[i].eta_hat += e.weight * (nb.eta_hat - self.eta_hat);
      d[i].S += e.weight * (nb.S - self.S);
      d[i].D += e.weight * (nb.D - self.D);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    d[i].eta_hat = est[i].S * est[i].eta_hat + c.beta2 * d[i].eta_hat;
    d[i].S *= c.beta1;
    d[i].D *= c.beta3;
  }
  return d;
}

std::vector<VectorXd> static_observer_rhs(const Graph& g, const std::vector<VectorXd>& eta,
                                          const MatrixXd& S, const std::vector<VectorXd>& omega,
                                          double beta) {
  const std::size_t n = eta.size();
  std::vector<VectorXd> consensus(n);
  for (std::size_t i = 0; i < n; ++i) consensus[i] = VectorXd::Zero(eta[i].size());
  for (const auto& e : g.edges) {
    const int i = e.to - 1;
    const VectorXd& src = g.is_leader(e.from) ? omega[e.from - g.n_followers - 1] : eta[e.from - 1];
    consensus[i] += e.weight * (src - eta[i]);
  }
  std::vector<VectorXd> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = S * eta[i] + beta * consensus[i];
  return d;
}

std::vector<VectorXd> convex_targets(const LaplacianPartition& lap,
                                     const std::vector<VectorXd>& omega) {
  const Eigen::Index n = lap.containment_weights.rows();
  std::vector<VectorXd> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = VectorXd::Zero(omega.front().size());
    for (std::size_t k = 0; k < omega.size(); ++k) {
      out[i] += lap.containment_weights(i, static_cast<Eigen::Index>(k)) * omega[k];
    }
  }
  return out;
}

VectorXd s_error_flow(const MatrixXd& L1, double beta1, Eigen::Index qbar, double t,
                      const VectorXd& s_tilde0) {
  const MatrixXd gen = -beta1 * t * kron(L1, MatrixXd::Identity(qbar * qbar, qbar * qbar));
  if (s_tilde0.size() != gen.rows()) throw std::invalid_argument("s_error_flow: size mismatch");
  return gen.exp() * s_tilde0;
}

const char* channel_name(ObserverChannel c) {
  switch (c) {
    case ObserverChannel::Xi: return "xi";
    case ObserverChannel::S: return "S";
    case ObserverChannel::D: return "D";
    case ObserverChannel::Eta: return "eta";
    case ObserverChannel::Y0: return "y0";
  }
  return "?";
}

const std::vector<double>& ObserverErrors::channel(ObserverChannel c) const {
  switch (c) {
    case ObserverChannel::Xi: return xi;
    case ObserverChannel::S: return S;
    case ObserverChannel::D: return D;
    case ObserverChannel::Eta: return eta;
    case ObserverChannel::Y0: return y0;
  }
  return xi;
}

double ObserverErrors::max() const {
  double m = 0.0;
  for (const auto* v : {&xi, &S, &D, &eta, &y0}) {
    for (double x : *v) m = std::max(m, x);
  }
  return m;
}

ObserverErrors observer_errors(const std::vector<VectorXd>& x, const std::vector<VectorXd>& xi,
                               const std::vector<AdaptiveEstimate>& est,
                               const std::vector<VectorXd>& omega_star,
                               const LeaderModel& leader) {
  ObserverErrors out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.xi.push_back((xi[i] - x[i]).norm());
    out.S.push_back((est[i].S - leader.S).norm());
    out.D.push_back((est[i].D - leader.D).norm());
    out.eta.push_back((est[i].eta_hat - omega_star[i]).norm());
    out.y0.push_back((est[i].y0() - leader.D * omega_star[i]).norm());
  }
  return out;
}

ExponentialFit fit_exponential(const std::vector<double>& t, const std::vector<double>& v,
                               double floor) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  int k = 0;
  for (std::size_t j = 0; j < t.size() && j < v.size(); ++j) {
    if (!(v[j] > floor)) continue;
    const double y = std::log(v[j]);
    st += t[j];
    sy += y;
    stt += t[j] * t[j];
    sty += t[j] * y;
    ++k;
  }
  ExponentialFit fit;
  fit.points = k;
  const double denom = k * stt - st * st;
  if (k < 2 || std::abs(denom) < 1e-300) return fit;
  const double slope = (k * sty - st * sy) / denom;
  fit.rate = -slope;
  fit.log_amplitude = (sy - slope * st) / k;
  fit.valid = true;
  return fit;
}

double ObserverErrorReport::max_after(double t0) const {
  double m = 0.0;
  for (const auto& ch : series) {
    for (const auto& s : ch) {
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= t0) m = std::max(m, s[k]);
      }
    }
  }
  return m;
}

ObserverErrorReport observer_error_report(const std::vector<double>& t,
                                          const std::vector<ObserverErrors>& samples,
                                          double floor) {
  ObserverErrorReport rep;
  rep.t = t;
  const std::size_t n = samples.empty() ? 0 : samples.front().xi.size();
  rep.series.assign(kObserverChannels, std::vector<std::vector<double>>(n));
  for (const auto& s : samples) {
    for (int c = 0; c < kObserverChannels; ++c) {
      const auto& ch = s.channel(static_cast<ObserverChannel>(c));
      for (std::size_t i = 0; i < n; ++i) rep.series[c][i].push_back(ch[i]);
    }
  }
  rep.fits.assign(kObserverChannels, {});
  for (int c = 0; c < kObserverChannels; ++c) {
    for (std::size_t i = 0; i < n; ++i) rep.fits[c].push_back(fit_exponential(t, rep.series[c][i], floor));
  }
  return rep;
}

}  // namespace occ
