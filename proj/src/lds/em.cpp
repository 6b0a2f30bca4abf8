#include "stpsm/lds/em.hpp"

#include <cmath>
#include <random>

#include "stpsm/core/errors.hpp"

namespace stpsm {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  if (eig.eigenvalues().minCoeff() >= 0.0) return symmetrize(m);
  return symmetrize(eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose());
}

bool is_observed(const ObservationMask* mask, int n, int t) { return !mask || mask->observed(n, t); }

/// Mean over coordinates of the per-coordinate variance of all observed entries.
double average_variance(const Sequences& obs, const ObservationMask* mask) {
  const Eigen::Index d = obs.front().rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
  double count = 0;
  for (std::size_t n = 0; n < obs.size(); ++n)
    for (Eigen::Index t = 0; t < obs[n].cols(); ++t)
      if (is_observed(mask, static_cast<int>(n), static_cast<int>(t))) {
        sum += obs[n].col(t);
        sq += obs[n].col(t).cwiseAbs2();
        ++count;
      }
  if (count == 0 || d == 0) return 0.0;
  const Eigen::VectorXd mean = sum / count;
  return ((sq / count) - mean.cwiseAbs2()).cwiseMax(0.0).mean();
}

double variance_floor(const Sequences& obs, const ObservationMask* mask, double relative) {
  const double avg = average_variance(obs, mask);
  return std::max(relative * avg, 1e-12);
}

/// Solves X M = B for symmetric PSD M with a relative ridge.
Eigen::MatrixXd solve_right(const Eigen::MatrixXd& B, const Eigen::MatrixXd& M, double ridge, int t) {
  Eigen::MatrixXd reg = symmetrize(M);
  const double scale = reg.trace() / static_cast<double>(reg.rows());
  reg.diagonal().array() += ridge * scale;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (!(scale > 0.0) || llt.info() != Eigen::Success)
    throw RankDeficientStatistics(t, "second-moment matrix is singular");
  return llt.solve(B.transpose()).transpose();
}

void check_inputs(const Sequences& obs, const ObservationMask* mask) {
  if (obs.size() < 2) throw InvalidArgument("EM needs at least two sequences");
  const Eigen::Index d = obs.front().rows(), t = obs.front().cols();
  if (d < 1 || t < 1) throw InvalidArgument("sequences must be non-empty");
  validate_sequences(obs, static_cast<int>(d), static_cast<int>(t), mask);
}

}  // namespace

LdsParams initialize_params(const Sequences& obs, int latent_dim, std::uint64_t seed, const ObservationMask* mask) {
  check_inputs(obs, mask);
  if (latent_dim < 1) throw InvalidArgument("latent dimension must be at least 1");
  const int n_count = static_cast<int>(obs.size()), d = static_cast<int>(obs.front().rows()),
            t_count = static_cast<int>(obs.front().cols()), l = latent_dim;

  std::vector<std::pair<int, int>> cells;
  for (int n = 0; n < n_count; ++n)
    for (int t = 0; t < t_count; ++t)
      if (is_observed(mask, n, t)) cells.emplace_back(n, t);
  Eigen::MatrixXd X(d, static_cast<Eigen::Index>(cells.size()));
  for (std::size_t c = 0; c < cells.size(); ++c) X.col(c) = obs[cells[c].first].col(cells[c].second);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && rank < l && sv(rank) > 1e-10 * std::max(sv(0), 1e-300)) ++rank;

  Eigen::MatrixXd W(d, l);
  W.leftCols(rank) = svd.matrixU().leftCols(rank);
  if (rank < l) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = rank; j < l; ++j)
      for (int i = 0; i < d; ++i) W(i, j) = normal(rng);
    if (l <= d) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
      Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, l);
      // Keep the principal directions exactly; only the random fill is orthogonalized.
      W.rightCols(l - rank) = Q.rightCols(l - rank);
    } else {
      for (int j = rank; j < l; ++j) W.col(j).normalize();
    }
  }

  LdsParams p = LdsParams::zeros(l, d, t_count);
  for (int t = 0; t < t_count; ++t) p.W[t] = W;
  p.state_cov = 0.1 * Eigen::MatrixXd::Identity(l, l);

  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(W);
  const Eigen::MatrixXd S = cod.solve(X);
  const Eigen::MatrixXd resid = X - W * S;
  const double floor = variance_floor(obs, mask, 1e-4);
  p.obs_var = (resid.cwiseAbs2().rowwise().sum() / static_cast<double>(cells.size())).cwiseMax(floor);

  Eigen::MatrixXd first(l, n_count);
  for (int n = 0; n < n_count; ++n) first.col(n) = cod.solve(obs[n].col(0));
  p.prior_mean = first.rowwise().mean();
  const Eigen::MatrixXd centered = first.colwise() - p.prior_mean;
  p.prior_cov = symmetrize(centered * centered.transpose() / n_count) + 0.1 * Eigen::MatrixXd::Identity(l, l);
  return p;
}

LdsParams m_step(const LdsParams& current, const Sequences& obs, const PosteriorMoments& pm, const EmOptions& options,
                 const ObservationMask* mask) {
  if (!pm.smoothed) throw InvalidArgument("M-step needs smoothed moments");
  const int n_count = static_cast<int>(obs.size()), t_count = current.length(), l = current.latent_dim(),
            d = current.obs_dim();
  LdsParams next = current;

  std::vector<Eigen::MatrixXd> ess(t_count, Eigen::MatrixXd::Zero(l, l));
  std::vector<Eigen::MatrixXd> cross(t_count, Eigen::MatrixXd::Zero(l, l));
  Eigen::VectorXd first_sum = Eigen::VectorXd::Zero(l);
  for (int n = 0; n < n_count; ++n) {
    for (int t = 0; t < t_count; ++t) {
      const Eigen::VectorXd& mu = pm.smoothed_mean[n][t];
      ess[t] += pm.smoothed_covariance(n, t) + mu * mu.transpose();
      if (t > 0) cross[t] += pm.lag_one(n, t - 1) + mu * pm.smoothed_mean[n][t - 1].transpose();
    }
    first_sum += pm.smoothed_mean[n][0];
  }

  for (int t = 1; t < t_count; ++t) next.A[t] = solve_right(cross[t], ess[t - 1], options.ridge, t - 1);
  if (t_count > 1) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(l, l);
    for (int t = 1; t < t_count; ++t) {
      const Eigen::MatrixXd& A = next.A[t];
      q += ess[t] - A * cross[t].transpose() - cross[t] * A.transpose() + A * ess[t - 1] * A.transpose();
    }
    next.state_cov = clamp_psd(q / static_cast<double>(n_count * (t_count - 1)));
  }

  Eigen::VectorXd resid = Eigen::VectorXd::Zero(d);
  double count = 0;
  for (int t = 0; t < t_count; ++t) {
    Eigen::MatrixXd xs = Eigen::MatrixXd::Zero(d, l), ss = Eigen::MatrixXd::Zero(l, l);
    Eigen::VectorXd xx = Eigen::VectorXd::Zero(d);
    int seen = 0;
    for (int n = 0; n < n_count; ++n) {
      if (!is_observed(mask, n, t)) continue;
      const Eigen::VectorXd& mu = pm.smoothed_mean[n][t];
      xs += obs[n].col(t) * mu.transpose();
      ss += pm.smoothed_covariance(n, t) + mu * mu.transpose();
      xx += obs[n].col(t).cwiseAbs2();
      ++seen;
    }
    if (seen == 0) continue;
    next.W[t] = solve_right(xs, ss, options.ridge, t);
    const Eigen::MatrixXd& W = next.W[t];
    resid += xx - 2.0 * (xs.cwiseProduct(W)).rowwise().sum() + ((W * ss).cwiseProduct(W)).rowwise().sum();
    count += seen;
  }
  next.obs_var = (resid / count).cwiseMax(variance_floor(obs, mask, options.obs_var_floor));

  next.prior_mean = first_sum / n_count;
  next.prior_cov = clamp_psd(ess[0] / n_count - next.prior_mean * next.prior_mean.transpose());

  next.A[0] = Eigen::MatrixXd::Identity(l, l);
  return next;
}

EmResult em_fit(const Sequences& obs, const EmOptions& options, const ObservationMask* mask) {
  if (options.iterations < 1) throw InvalidArgument("EM needs at least one iteration");
  check_inputs(obs, mask);
  EmResult result;
  result.params = initialize_params(obs, options.latent_dim, options.init_seed, mask);
  PosteriorMoments pm = e_step(result.params, obs, mask);
  for (int i = 0; i < options.iterations; ++i) {
    result.params = m_step(result.params, obs, pm, options, mask);
    pm = e_step(result.params, obs, mask);
    if (!std::isfinite(pm.log_likelihood)) throw NonFinite("log-likelihood is not finite after iteration " + std::to_string(i + 1));
    result.loglik_trace.push_back(pm.log_likelihood);
  }
  return result;
}

}  // namespace stpsm
