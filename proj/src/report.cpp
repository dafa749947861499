#include "occ/report.hpp"

#include <cstdio>

#include "occ/scenario_io.hpp"

namespace occ {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

std::vector<std::string> csv_header(const Scenario& s) {
  std::vector<std::string> h{"t"};
  const Eigen::Index q = s.leader.outputs();
  for (std::size_t i = 0; i < s.followers.size(); ++i) {
    const std::string id = std::to_string(i + 1);
    for (const char* base : {"y", "yhat", "y0", "e"}) {
      for (Eigen::Index c = 1; c <= q; ++c) h.push_back(base + id + "_" + std::to_string(c));
    }
    for (Eigen::Index j = 1; j <= s.followers[i].inputs(); ++j) h.push_back("u" + id + "_" + std::to_string(j));
    for (const char* base : {"err_xi", "err_S", "err_D", "err_eta"}) h.push_back(base + id);
  }
  return h;
}

void write_trajectory_csv(std::ostream& out, const Scenario& s, const Trajectory& traj) {
  const auto header = csv_header(s);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << "\n";
  const std::size_t n = s.followers.size();
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    std::string row = format_number(traj.t[k]);
    auto put = [&](double v) {
      row += ',';
      row += format_number(v);
    };
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto* ch : {&traj.y, &traj.yhat, &traj.y0, &traj.e}) {
        const VectorXd& v = (*ch)[k][i];
        for (Eigen::Index c = 0; c < v.size(); ++c) put(v(c));
      }
      const VectorXd& u = traj.u[k][i];
      for (Eigen::Index j = 0; j < u.size(); ++j) put(u(j));
      const ObserverErrors& err = traj.errors[k];
      put(err.xi[i]);
      put(err.S[i]);
      put(err.D[i]);
      put(err.eta[i]);
    }
    out << row << "\n";
  }
}

void write_learning_log(std::ostream& out, const LearningOutcome& lo) {
  out << "follower,iteration,condition,gain\n";
  for (std::size_t i = 0; i < lo.followers.size(); ++i) {
    const LearningResult& r = lo.followers[i].learning;
    for (std::size_t k = 0; k < r.gains.size(); ++k) {
      out << i + 1 << "," << k << "," << (k == 0 ? std::string("") : format_number(r.conditions[k - 1])) << ",";
      const MatrixXd& K = r.gains[k];
      for (Eigen::Index e = 0; e < K.size(); ++e) out << (e ? " " : "") << format_number(K.data()[e]);
      out << "\n";
    }
  }
}

nlohmann::json gain_report(const Scenario& s, const GainSet& g) {
  nlohmann::json fs = nlohmann::json::array();
  for (std::size_t i = 0; i < g.followers.size(); ++i) {
    const FollowerGains& f = g.followers[i];
    fs.push_back({{"follower", i + 1},
                  {"Pi", matrix_to_json(f.regulator.Pi)},
                  {"Gamma", matrix_to_json(f.regulator.Gamma)},
                  {"regulator_residual", f.regulator.residual},
                  {"Phi", matrix_to_json(f.observer.Phi)},
                  {"F", matrix_to_json(f.observer.F)},
                  {"observer_residual", f.observer.residual},
                  {"Psi", matrix_to_json(f.optimal.Psi.X)},
                  {"Kbar_optimal", matrix_to_json(f.optimal.Kbar)},
                  {"K1", matrix_to_json(f.K1)},
                  {"K2", matrix_to_json(f.K2)},
                  {"mu", f.mu},
                  {"gamma", f.gamma},
                  {"gamma_star", f.gamma_star},
                  {"gamma_star_scalar", f.gamma_star_scalar}});
  }
  return {{"feedforward", s.feedforward == FeedforwardMode::Optimal ? "optimal" : "regulator"},
          {"mu_bound", g.mu_bound},
          {"beta", g.beta},
          {"beta1", g.couplings.beta1},
          {"beta2", g.couplings.beta2},
          {"beta3", g.couplings.beta3},
          {"followers", fs}};
}

namespace {

std::string row_string(const MatrixXd& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.4f", (i || j) ? (j ? ", " : "; ") : "", m(i, j));
      s += buf;
    }
  }
  return s + "]";
}

}  // namespace

void print_gain_table(std::ostream& out, const GainSet& g) {
  for (std::size_t i = 0; i < g.followers.size(); ++i) {
    const FollowerGains& f = g.followers[i];
    char gam[96];
    std::snprintf(gam, sizeof gam, "gamma %.4g (bound %.4g)", f.gamma, f.gamma_star);
    out << "follower " << i + 1 << "\n"
        << "  Pi    " << row_string(f.regulator.Pi) << "  Gamma " << row_string(f.regulator.Gamma) << "\n"
        << "  F     " << row_string(f.observer.F) << "\n"
        << "  Kbar* " << row_string(f.optimal.Kbar) << "\n"
        << "  K1    " << row_string(f.K1) << "  K2 " << row_string(f.K2) << "\n"
        << "  " << gam << "\n";
  }
}

}  // namespace occ
