#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stpsm/lds/params.hpp"

namespace stpsm {

/// Filter and smoother moments. Means are per (sequence, t). Covariances depend only on
/// the mask pattern, so they are stored once per distinct pattern and looked up through
/// `pattern` (all sequences share pattern 0 when nothing is masked).
struct PosteriorMoments {
  std::vector<int> pattern;
  std::vector<std::vector<Eigen::VectorXd>> predicted_mean;
  std::vector<std::vector<Eigen::VectorXd>> filtered_mean;
  std::vector<std::vector<Eigen::VectorXd>> smoothed_mean;
  std::vector<std::vector<Eigen::MatrixXd>> predicted_cov;
  std::vector<std::vector<Eigen::MatrixXd>> filtered_cov;
  std::vector<std::vector<Eigen::MatrixXd>> smoothed_cov;
  /// lag_one_cov[p][t] = Cov[s_{t+1}, s_t | all data], t = 0 .. T-2.
  std::vector<std::vector<Eigen::MatrixXd>> lag_one_cov;
  /// Observed-data log-likelihood; NaN when some innovation covariance is singular.
  double log_likelihood = 0.0;
  bool smoothed = false;

  const Eigen::MatrixXd& predicted(int n, int t) const { return predicted_cov[pattern[n]][t]; }
  const Eigen::MatrixXd& filtered(int n, int t) const { return filtered_cov[pattern[n]][t]; }
  const Eigen::MatrixXd& smoothed_covariance(int n, int t) const { return smoothed_cov[pattern[n]][t]; }
  const Eigen::MatrixXd& lag_one(int n, int t) const { return lag_one_cov[pattern[n]][t]; }
};

/// Forward pass with Joseph-form covariance updates. Unobserved frames skip the
/// measurement step. A null mask means every frame is observed.
PosteriorMoments kalman_filter(const LdsParams& params, const Sequences& obs, const ObservationMask* mask = nullptr);

/// Rauch-Tung-Striebel backward pass filling the smoothed and lag-one moments.
void rts_smooth(const LdsParams& params, PosteriorMoments& moments);

/// Filter followed by smoother.
PosteriorMoments e_step(const LdsParams& params, const Sequences& obs, const ObservationMask* mask = nullptr);

/// Sum over observed frames of log N(r_{n,t}; 0, P_t). Throws SingularInnovation.
double log_likelihood(const LdsParams& params, const Sequences& obs, const ObservationMask* mask = nullptr);

}  // namespace stpsm
