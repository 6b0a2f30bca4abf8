#pragma once

#include <vector>

#include <Eigen/Dense>

namespace stpsm {

/// One D x T matrix per sequence (column t is the observation at time t).
using Sequences = std::vector<Eigen::MatrixXd>;

/// Time-variant linear dynamical system
///   s_1 ~ N(mu_0, V_0),  s_t = A_t s_{t-1} + e_s,  x_t = W_t s_t + e_x
/// with e_s ~ N(0, state_cov) and e_x ~ N(0, diag(obs_var)).
struct LdsParams {
  /// A[0] is never used; kept as the identity so indices line up with W.
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::MatrixXd> W;
  Eigen::MatrixXd state_cov;
  Eigen::VectorXd obs_var;
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_cov;

  int latent_dim() const noexcept { return static_cast<int>(prior_mean.size()); }
  int obs_dim() const noexcept { return static_cast<int>(obs_var.size()); }
  int length() const noexcept { return static_cast<int>(W.size()); }
  Eigen::MatrixXd obs_cov() const { return obs_var.asDiagonal(); }

  /// Checks shapes, finiteness and PSD covariances (min eigenvalue >= -1e-10).
  /// Throws DimensionMismatch, NonFinite or InvalidArgument.
  void validate() const;
  /// Symmetrizes the covariances and clamps tiny negative eigenvalues to zero.
  void sanitize();

  static LdsParams zeros(int latent_dim, int obs_dim, int length);
};

/// observed(n, t) says whether x_{n,t} enters the filter.
struct ObservationMask {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed;

  static ObservationMask all_observed(int n_sequences, int length);
  int sequences() const noexcept { return static_cast<int>(observed.rows()); }
  int length() const noexcept { return static_cast<int>(observed.cols()); }
  bool full() const { return observed.all(); }
  /// Every sequence must observe its first frame. Throws InvalidArgument.
  void validate(int n_sequences, int length) const;
};

/// Checks N x (D x T) structure and finiteness of observed entries.
void validate_sequences(const Sequences& obs, int obs_dim, int length, const ObservationMask* mask = nullptr);

/// Symmetric positive semi-definite square root factor F with F F^T = S.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S);

/// x -> (x - offset) / scale applied to every coordinate alike.
struct UniformScaling {
  double offset = 0.0;
  double scale = 1.0;

  /// Maps the global minimum to 0 and maximum to 1. Constant data gets scale 1.
  static UniformScaling fit(const Sequences& data);
  Sequences apply(const Sequences& data) const;
  Sequences invert(const Sequences& data) const;
  /// Converts an error measured in scaled units back to data units.
  double unscale_length(double value) const { return value * scale; }
};

}  // namespace stpsm
