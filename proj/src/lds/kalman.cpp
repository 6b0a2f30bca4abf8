#include "stpsm/lds/kalman.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "stpsm/core/errors.hpp"
#include "stpsm/core/parallel.hpp"

namespace stpsm {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Moore-Penrose inverse of a symmetric PSD matrix; `singular` reports a dropped direction.
Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& m, bool* singular = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cutoff = std::max(ev.cwiseAbs().maxCoeff(), 0.0) * 1e-13 * static_cast<double>(m.rows());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  bool dropped = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff && ev(i) > 0.0) inv(i) = 1.0 / ev(i);
    else dropped = true;
  }
  if (singular) *singular = dropped;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

/// Measurement update of one (pattern, t): everything that does not depend on the data.
struct Update {
  bool woodbury = true;
  Eigen::MatrixXd S;       // Woodbury: V (I + C V)^{-1}
  Eigen::MatrixXd gain;    // dense: V W^T P^+
  Eigen::MatrixXd p_pinv;  // dense: P^+
  double logdet = 0.0;
  bool singular = false;
};

struct Shared {
  Eigen::VectorXd r_inv;
  std::vector<Eigen::MatrixXd> C;      // W_t^T R^{-1} W_t
  std::vector<Eigen::MatrixXd> WtRinv;  // W_t^T R^{-1}
  bool woodbury = true;
  double log_r = 0.0;
};

Shared precompute(const LdsParams& params) {
  Shared sh;
  const int d = params.obs_dim();
  sh.woodbury = d == 0 || params.obs_var.minCoeff() > 0.0;
  if (sh.woodbury) {
    sh.r_inv = params.obs_var.cwiseInverse();
    sh.log_r = params.obs_var.array().log().sum();
    for (int t = 0; t < params.length(); ++t) {
      sh.WtRinv.push_back(params.W[t].transpose() * sh.r_inv.asDiagonal());
      sh.C.push_back(symmetrize(sh.WtRinv.back() * params.W[t]));
    }
  }
  return sh;
}

Update measurement(const LdsParams& params, const Shared& sh, int t, const Eigen::MatrixXd& V, Eigen::MatrixXd& V_filtered) {
  const int l = params.latent_dim();
  Update u;
  u.woodbury = sh.woodbury;
  if (sh.woodbury) {
    const Eigen::MatrixXd mtx = Eigen::MatrixXd::Identity(l, l) + sh.C[t] * V;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(mtx.transpose());
    u.S = symmetrize(lu.solve(V).transpose());
    double logdet_m = 0.0;
    const Eigen::MatrixXd& lu_mat = lu.matrixLU();
    for (int i = 0; i < l; ++i) logdet_m += std::log(std::abs(lu_mat(i, i)));
    u.logdet = sh.log_r + logdet_m;
    const Eigen::MatrixXd ikw = Eigen::MatrixXd::Identity(l, l) - u.S * sh.C[t];
    V_filtered = symmetrize(ikw * V * ikw.transpose() + u.S * sh.C[t] * u.S);
  } else {
    const Eigen::MatrixXd& W = params.W[t];
    const Eigen::MatrixXd P = symmetrize(W * V * W.transpose()) + Eigen::MatrixXd(params.obs_var.asDiagonal());
    u.p_pinv = psd_pinv(P, &u.singular);
    u.gain = V * W.transpose() * u.p_pinv;
    if (!u.singular) {
      Eigen::LLT<Eigen::MatrixXd> llt(P);
      if (llt.info() != Eigen::Success) {
        u.singular = true;
      } else {
        const Eigen::MatrixXd& L = llt.matrixL();
        u.logdet = 2.0 * L.diagonal().array().log().sum();
      }
    }
    const Eigen::MatrixXd ikw = Eigen::MatrixXd::Identity(l, l) - u.gain * W;
    V_filtered = symmetrize(ikw * V * ikw.transpose() + u.gain * params.obs_var.asDiagonal() * u.gain.transpose());
  }
  if (!V_filtered.allFinite()) throw NonFinite("filtered covariance is not finite at t=" + std::to_string(t + 1));
  return u;
}

}  // namespace

PosteriorMoments kalman_filter(const LdsParams& params, const Sequences& obs, const ObservationMask* mask) {
  params.validate();
  const int n_count = static_cast<int>(obs.size()), t_count = params.length(), d = params.obs_dim();
  validate_sequences(obs, d, t_count, mask);

  PosteriorMoments pm;
  pm.pattern.assign(n_count, 0);
  std::vector<std::vector<bool>> patterns;
  if (!mask || mask->full()) {
    patterns.emplace_back(t_count, true);
  } else {
    std::map<std::vector<bool>, int> ids;
    for (int n = 0; n < n_count; ++n) {
      std::vector<bool> row(t_count);
      for (int t = 0; t < t_count; ++t) row[t] = mask->observed(n, t);
      auto [it, inserted] = ids.emplace(row, static_cast<int>(patterns.size()));
      if (inserted) patterns.push_back(row);
      pm.pattern[n] = it->second;
    }
  }

  const Shared sh = precompute(params);
  const int p_count = static_cast<int>(patterns.size());
  pm.predicted_cov.assign(p_count, std::vector<Eigen::MatrixXd>(t_count));
  pm.filtered_cov.assign(p_count, std::vector<Eigen::MatrixXd>(t_count));
  std::vector<std::vector<Update>> updates(p_count, std::vector<Update>(t_count));
  for (int p = 0; p < p_count; ++p) {
    for (int t = 0; t < t_count; ++t) {
      Eigen::MatrixXd V = t == 0 ? symmetrize(params.prior_cov)
                                 : symmetrize(params.A[t] * pm.filtered_cov[p][t - 1] * params.A[t].transpose() +
                                              params.state_cov);
      if (patterns[p][t]) updates[p][t] = measurement(params, sh, t, V, pm.filtered_cov[p][t]);
      else pm.filtered_cov[p][t] = V;
      pm.predicted_cov[p][t] = std::move(V);
    }
  }

  pm.predicted_mean.assign(n_count, std::vector<Eigen::VectorXd>(t_count));
  pm.filtered_mean.assign(n_count, std::vector<Eigen::VectorXd>(t_count));
  std::vector<double> loglik(n_count, 0.0);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  parallel_for(n_count, [&](int n) {
    const int p = pm.pattern[n];
    for (int t = 0; t < t_count; ++t) {
      Eigen::VectorXd mu = t == 0 ? Eigen::VectorXd(params.prior_mean) : Eigen::VectorXd(params.A[t] * pm.filtered_mean[n][t - 1]);
      pm.predicted_mean[n][t] = mu;
      if (patterns[p][t]) {
        const Update& u = updates[p][t];
        const Eigen::VectorXd r = obs[n].col(t) - params.W[t] * mu;
        double quad = 0.0;
        if (u.woodbury) {
          const Eigen::VectorXd a = sh.WtRinv[t] * r;
          const Eigen::VectorXd sa = u.S * a;
          mu += sa;
          quad = r.dot(sh.r_inv.cwiseProduct(r)) - a.dot(sa);
        } else {
          mu += u.gain * r;
          quad = r.dot(u.p_pinv * r);
        }
        loglik[n] += u.singular ? std::numeric_limits<double>::quiet_NaN() : -0.5 * (d * log2pi + u.logdet + quad);
      }
      if (!mu.allFinite()) throw NonFinite("filtered mean is not finite at t=" + std::to_string(t + 1));
      pm.filtered_mean[n][t] = std::move(mu);
    }
  });
  pm.log_likelihood = 0.0;
  for (double v : loglik) pm.log_likelihood += v;
  return pm;
}

void rts_smooth(const LdsParams& params, PosteriorMoments& pm) {
  const int t_count = params.length();
  const int n_count = static_cast<int>(pm.filtered_mean.size());
  const int p_count = static_cast<int>(pm.filtered_cov.size());
  if (p_count == 0 || static_cast<int>(pm.filtered_cov[0].size()) != t_count)
    throw DimensionMismatch("moments do not come from a filter over these parameters");

  pm.smoothed_cov.assign(p_count, std::vector<Eigen::MatrixXd>(t_count));
  pm.lag_one_cov.assign(p_count, std::vector<Eigen::MatrixXd>(std::max(t_count - 1, 0)));
  std::vector<std::vector<Eigen::MatrixXd>> gains(p_count, std::vector<Eigen::MatrixXd>(std::max(t_count - 1, 0)));
  for (int p = 0; p < p_count; ++p) {
    pm.smoothed_cov[p][t_count - 1] = pm.filtered_cov[p][t_count - 1];
    for (int t = t_count - 2; t >= 0; --t) {
      const Eigen::MatrixXd& Vf = pm.filtered_cov[p][t];
      const Eigen::MatrixXd& Vp = pm.predicted_cov[p][t + 1];
      const Eigen::MatrixXd AVf = params.A[t + 1] * Vf;
      Eigen::MatrixXd J;
      Eigen::LLT<Eigen::MatrixXd> llt(Vp);
      if (llt.info() == Eigen::Success && Vp.diagonal().minCoeff() > 0.0) J = llt.solve(AVf).transpose();
      else J = (psd_pinv(Vp) * AVf).transpose();
      if (!J.allFinite()) throw SingularPrediction("backward gain is not finite at t=" + std::to_string(t + 1));
      pm.smoothed_cov[p][t] = symmetrize(Vf + J * (pm.smoothed_cov[p][t + 1] - Vp) * J.transpose());
      pm.lag_one_cov[p][t] = pm.smoothed_cov[p][t + 1] * J.transpose();
      gains[p][t] = std::move(J);
    }
  }

  pm.smoothed_mean.assign(n_count, std::vector<Eigen::VectorXd>(t_count));
  parallel_for(n_count, [&](int n) {
    const int p = pm.pattern[n];
    pm.smoothed_mean[n][t_count - 1] = pm.filtered_mean[n][t_count - 1];
    for (int t = t_count - 2; t >= 0; --t)
      pm.smoothed_mean[n][t] =
          pm.filtered_mean[n][t] + gains[p][t] * (pm.smoothed_mean[n][t + 1] - pm.predicted_mean[n][t + 1]);
  });
  pm.smoothed = true;
}

PosteriorMoments e_step(const LdsParams& params, const Sequences& obs, const ObservationMask* mask) {
  PosteriorMoments pm = kalman_filter(params, obs, mask);
  rts_smooth(params, pm);
  return pm;
}

double log_likelihood(const LdsParams& params, const Sequences& obs, const ObservationMask* mask) {
  const double ll = kalman_filter(params, obs, mask).log_likelihood;
  if (std::isnan(ll)) throw SingularInnovation("innovation covariance is singular");
  return ll;
}

}  // namespace stpsm
