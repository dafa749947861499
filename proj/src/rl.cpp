#include "occ/rl.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "occ/errors.hpp"

namespace occ {

VectorXd critic_basis(const VectorXd& x) {
  const Eigen::Index d = x.size();
  VectorXd s(critic_size(d));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) s(k++) = x(i) * x(j);
  }
  return s;
}

namespace {

Eigen::Index dimension_from_weights(Eigen::Index m) {
  const auto d = static_cast<Eigen::Index>(std::llround((std::sqrt(8.0 * m + 1.0) - 1.0) / 2.0));
  if (critic_size(d) != m) {
    throw std::invalid_argument("critic weight length " + std::to_string(m) +
                                " is not a triangular number");
  }
  return d;
}

}  // namespace

MatrixXd weights_to_matrix(const VectorXd& w) {
  const Eigen::Index d = dimension_from_weights(w.size());
  MatrixXd psi(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    psi(i, i) = w(k++);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      psi(i, j) = psi(j, i) = 0.5 * w(k++);
    }
  }
  return psi;
}

VectorXd matrix_to_weights(const MatrixXd& psi) {
  const Eigen::Index d = psi.rows();
  if (psi.cols() != d) throw std::invalid_argument("matrix_to_weights: matrix not square");
  VectorXd w(critic_size(d));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    w(k++) = psi(i, i);
    for (Eigen::Index j = i + 1; j < d; ++j) w(k++) = psi(i, j) + psi(j, i);
  }
  return w;
}

void IntervalAccumulator::rhs(double gamma, double tau, const VectorXd& x, const VectorXd& u,
                              const VectorXd& z, const MatrixXd& Q, Eigen::Ref<VectorXd> out) {
  const Eigen::Index d = x.size();
  const Eigen::Index p = u.size();
  const double e = std::exp(-gamma * tau);
  out(0) = e * z.dot(Q * z);
  Eigen::Map<MatrixXd>(out.data() + 1, d, d) = e * x * x.transpose();
  Eigen::Map<MatrixXd>(out.data() + 1 + d * d, d, p) = e * x * u.transpose();
}

IntervalRecord IntervalAccumulator::unpack(const Eigen::Ref<const VectorXd>& acc, Eigen::Index d,
                                           Eigen::Index p, double T, const VectorXd& x_start,
                                           const VectorXd& x_end) {
  IntervalRecord rec;
  rec.T = T;
  rec.x_start = x_start;
  rec.x_end = x_end;
  rec.cost = acc(0);
  rec.xx = symmetrize(Eigen::Map<const MatrixXd>(acc.data() + 1, d, d));
  rec.xu = Eigen::Map<const MatrixXd>(acc.data() + 1 + d * d, d, p);
  return rec;
}

RegressionRow sample_row(const IntervalRecord& rec, const MatrixXd& K, const MatrixXd& W,
                         double gamma) {
  const Eigen::Index d = rec.x_start.size();
  const Eigen::Index p = K.rows();
  const Eigen::Index mc = critic_size(d);
  RegressionRow row;
  row.y = -rec.cost - (K.transpose() * W * K).cwiseProduct(rec.xx).sum();
  row.xi.resize(mc + p * d);
  row.xi.head(mc) = std::exp(-gamma * rec.T) * critic_basis(rec.x_end) - critic_basis(rec.x_start);
  // int e x v^T with v = u - K x the off-policy mismatch.
  const MatrixXd actor = 2.0 * (rec.xu - rec.xx * K.transpose()) * W;
  for (Eigen::Index j = 0; j < p; ++j) row.xi.segment(mc + j * d, d) = actor.col(j);
  return row;
}

SampleBatch build_batch(const std::vector<IntervalRecord>& records, const MatrixXd& K,
                        const MatrixXd& W, double gamma) {
  SampleBatch b;
  b.d = K.cols();
  b.p = K.rows();
  b.gamma = gamma;
  b.T = records.empty() ? 0.0 : records.front().T;
  b.rows.reserve(records.size());
  for (const auto& r : records) b.rows.push_back(sample_row(r, K, W, gamma));
  return b;
}

LeastSquaresUpdate least_squares_update(const SampleBatch& batch, const LeastSquaresOptions& opts) {
  const Eigen::Index m = batch.unknowns();
  const auto rows = static_cast<Eigen::Index>(batch.rows.size());
  if (rows < m) {
    throw std::invalid_argument("batch has " + std::to_string(rows) + " rows, needs at least " +
                                std::to_string(m));
  }
  MatrixXd xi(rows, m);
  VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    xi.row(r) = batch.rows[r].xi.transpose();
    y(r) = batch.rows[r].y;
  }
  // Column equilibration so the condition number reflects excitation, not units.
  VectorXd scale = xi.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (scale(j) == 0.0) scale(j) = 1.0;
  }
  const MatrixXd xs = xi * scale.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<MatrixXd> qr(xs);
  qr.setThreshold(opts.rank_tolerance);
  if (qr.rank() < m) {
    std::ostringstream msg;
    msg << "insufficient excitation: regressor rank " << qr.rank() << " < " << m;
    throw SynthesisError(msg.str());
  }
  Eigen::JacobiSVD<MatrixXd> svd(xs);
  const auto& s = svd.singularValues();
  const double cond = s(0) / s(s.size() - 1);
  if (!(cond <= opts.max_condition)) {
    std::ostringstream msg;
    msg << "insufficient excitation: regressor condition number " << cond << " exceeds "
        << opts.max_condition;
    throw SynthesisError(msg.str());
  }
  const VectorXd sol = qr.solve(y).cwiseQuotient(scale);

  LeastSquaresUpdate out;
  const Eigen::Index mc = critic_size(batch.d);
  out.critic = sol.head(mc);
  out.actor = unvec(sol.tail(batch.p * batch.d), batch.d, batch.p);
  out.condition = cond;
  out.residual = (xi * sol - y).norm();
  return out;
}

MatrixXd policy_evaluation(const AugmentedSystem& aug, const MatrixXd& Q, const MatrixXd& W,
                           double gamma, const MatrixXd& K) {
  const Eigen::Index d = aug.dim();
  const MatrixXd acl = aug.P + aug.Bbar * K - 0.5 * gamma * MatrixXd::Identity(d, d);
  if (!is_hurwitz(acl)) throw SynthesisError("policy is not admissible for the discounted system");
  return solve_lyapunov(acl, (aug.state_cost(Q) + K.transpose() * W * K).eval());
}

PolicyIterate model_based_step(const MatrixXd& K_k, const AugmentedSystem& aug, const MatrixXd& Q,
                               const MatrixXd& W, double gamma) {
  PolicyIterate out;
  out.Psi = policy_evaluation(aug, Q, W, gamma, K_k);
  out.K = -W.ldlt().solve(aug.Bbar.transpose() * out.Psi);
  return out;
}

PolicyIterate model_based_iterate(const MatrixXd& psi_k, const AugmentedSystem& aug,
                                  const MatrixXd& Q, const MatrixXd& W, double gamma) {
  const MatrixXd K_k = -W.ldlt().solve(aug.Bbar.transpose() * psi_k);
  return model_based_step(K_k, aug, Q, W, gamma);
}

IntervalRecord lti_interval_record(const MatrixXd& Az, const MatrixXd& Sx, const MatrixXd& Su,
                                   const MatrixXd& M, const VectorXd& z0, double T, double gamma) {
  const Eigen::Index nz = Az.rows();
  const MatrixXd at = Az - 0.5 * gamma * MatrixXd::Identity(nz, nz);
  // Van Loan: exp([[-At, Z0], [0, At^T]] T) gives int_0^T e^{At s} Z0 e^{At^T s} ds = G22^T G12.
  MatrixXd h = MatrixXd::Zero(2 * nz, 2 * nz);
  h.topLeftCorner(nz, nz) = -at;
  h.topRightCorner(nz, nz) = z0 * z0.transpose();
  h.bottomRightCorner(nz, nz) = at.transpose();
  const MatrixXd g = (h * T).exp();
  const MatrixXd zz = symmetrize(g.bottomRightCorner(nz, nz).transpose() * g.topRightCorner(nz, nz));

  IntervalRecord rec;
  rec.T = T;
  rec.x_start = Sx * z0;
  rec.x_end = Sx * (Az * T).exp() * z0;
  rec.cost = (M * zz).trace();
  rec.xx = Sx * zz * Sx.transpose();
  rec.xu = Sx * zz * Su.transpose();
  return rec;
}

std::vector<IntervalRecord> exact_behaviour_records(const AugmentedSystem& aug, const MatrixXd& Q,
                                                    const MatrixXd& Kb, int count, double T,
                                                    double gamma, std::uint64_t seed) {
  const Eigen::Index d = aug.dim();
  const Eigen::Index p = aug.Bbar.cols();
  const double freqs[] = {0.7, 1.9, 3.3};
  const Eigen::Index osc = 3 * p;
  const Eigen::Index nz = d + 2 * osc;
  MatrixXd omega = MatrixXd::Zero(2 * osc, 2 * osc);
  MatrixXd H = MatrixXd::Zero(p, 2 * osc);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Index b = 2 * (3 * j + k);
      const double w = freqs[k] * (1.0 + 0.13 * static_cast<double>(j));
      omega(b, b + 1) = w;
      omega(b + 1, b) = -w;
      H(j, b) = 1.0;
    }
  }
  MatrixXd az = MatrixXd::Zero(nz, nz);
  az.topLeftCorner(d, d) = aug.P + aug.Bbar * Kb;
  az.topRightCorner(d, 2 * osc) = aug.Bbar * H;
  az.bottomRightCorner(2 * osc, 2 * osc) = omega;
  MatrixXd sx = MatrixXd::Zero(d, nz);
  sx.leftCols(d).setIdentity();
  MatrixXd su(p, nz);
  su << Kb, H;
  MatrixXd m = MatrixXd::Zero(nz, nz);
  m.topLeftCorner(d, d) = aug.state_cost(Q);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<IntervalRecord> out;
  for (int r = 0; r < count; ++r) {
    VectorXd z0(nz);
    for (Eigen::Index k = 0; k < nz; ++k) z0(k) = unif(rng);
    out.push_back(lti_interval_record(az, sx, su, m, z0, T, gamma));
  }
  return out;
}

LearningResult run_off_policy(const std::vector<IntervalRecord>& records, const MatrixXd& K0,
                              const MatrixXd& W, double gamma, const LearnerOptions& opts) {
  LearningResult res;
  const Eigen::Index d = K0.cols();
  auto stack = [&](const VectorXd& critic, const MatrixXd& actor) {
    VectorXd w(critic.size() + actor.size());
    w << critic, vec(actor);
    return w;
  };
  res.gains.push_back(K0);
  res.weights.push_back(stack(VectorXd::Zero(critic_size(d)), K0.transpose()));
  MatrixXd K = K0;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    LeastSquaresUpdate upd;
    try {
      upd = least_squares_update(build_batch(records, K, W, gamma), opts.ls);
    } catch (const std::exception& e) {
      res.failure = e.what();
      break;
    }
    K = upd.gain();
    res.gains.push_back(K);
    res.weights.push_back(stack(upd.critic, upd.actor));
    res.conditions.push_back(upd.condition);
    res.iterations = k;
    const double step = (res.weights.back() - res.weights[res.weights.size() - 2]).norm();
    if (step <= opts.tau) {
      res.converged = true;
      break;
    }
  }
  return res;
}

ExplorationNoise::ExplorationNoise(Eigen::Index channels, double amplitude, std::uint64_t seed,
                                   int components, double w_min, double w_max)
    : amplitude_(amplitude), freq_(channels, components), phase_(channels, components) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(w_min, w_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (int k = 0; k < components; ++k) {
      freq_(c, k) = freq(rng);
      phase_(c, k) = phase(rng);
    }
  }
}

VectorXd ExplorationNoise::operator()(double t) const {
  VectorXd v(freq_.rows());
  for (Eigen::Index c = 0; c < freq_.rows(); ++c) {
    v(c) = amplitude_ * (freq_.row(c).array() * t + phase_.row(c).array()).sin().sum();
  }
  return v;
}

}  // namespace occ
