#include "stpsm/lds/params.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "stpsm/core/errors.hpp"

namespace stpsm {

namespace {

void check_square(const Eigen::MatrixXd& m, int size, const char* name) {
  if (m.rows() != size || m.cols() != size)
    throw DimensionMismatch(std::string(name) + " must be " + std::to_string(size) + "x" + std::to_string(size));
}

void check_psd(const Eigen::MatrixXd& m, const char* name) {
  if (m.size() == 0) return;
  if (!m.allFinite()) throw NonFinite(std::string(name) + " has non-finite entries");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  if ((m - sym).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw InvalidArgument(std::string(name) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) throw InvalidArgument(std::string(name) + " is not positive semi-definite");
}

Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
  const Eigen::MatrixXd& u = eig.eigenvectors();
  Eigen::MatrixXd out = u * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * u.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

LdsParams LdsParams::zeros(int latent_dim, int obs_dim, int length) {
  LdsParams p;
  p.A.assign(length, Eigen::MatrixXd::Identity(latent_dim, latent_dim));
  p.W.assign(length, Eigen::MatrixXd::Zero(obs_dim, latent_dim));
  p.state_cov = Eigen::MatrixXd::Zero(latent_dim, latent_dim);
  p.obs_var = Eigen::VectorXd::Zero(obs_dim);
  p.prior_mean = Eigen::VectorXd::Zero(latent_dim);
  p.prior_cov = Eigen::MatrixXd::Zero(latent_dim, latent_dim);
  return p;
}

void LdsParams::validate() const {
  const int l = latent_dim(), d = obs_dim(), t = length();
  if (t < 1) throw DimensionMismatch("LDS needs at least one time step");
  if (static_cast<int>(A.size()) != t) throw DimensionMismatch("A and W lengths differ");
  for (int i = 0; i < t; ++i) {
    check_square(A[i], l, "A_t");
    if (W[i].rows() != d || W[i].cols() != l) throw DimensionMismatch("W_t must be D x L");
    if (!A[i].allFinite() || !W[i].allFinite()) throw NonFinite("A_t or W_t has non-finite entries");
  }
  check_square(state_cov, l, "state_cov");
  check_square(prior_cov, l, "prior_cov");
  if (!prior_mean.allFinite() || !obs_var.allFinite()) throw NonFinite("prior_mean or obs_var has non-finite entries");
  if (d > 0 && obs_var.minCoeff() < 0.0) throw InvalidArgument("obs_var must be non-negative");
  check_psd(state_cov, "state_cov");
  check_psd(prior_cov, "prior_cov");
}

void LdsParams::sanitize() {
  state_cov = clamp_psd(state_cov);
  prior_cov = clamp_psd(prior_cov);
  obs_var = obs_var.cwiseMax(0.0);
}

ObservationMask ObservationMask::all_observed(int n_sequences, int length) {
  ObservationMask m;
  m.observed.setConstant(n_sequences, length, true);
  return m;
}

void ObservationMask::validate(int n_sequences, int len) const {
  if (sequences() != n_sequences || length() != len)
    throw DimensionMismatch("mask is " + std::to_string(sequences()) + "x" + std::to_string(length()) + ", data is " +
                            std::to_string(n_sequences) + "x" + std::to_string(len));
  for (int n = 0; n < n_sequences; ++n)
    if (len > 0 && !observed(n, 0)) throw InvalidArgument("sequence " + std::to_string(n) + " must observe its first frame");
}

void validate_sequences(const Sequences& obs, int obs_dim, int length, const ObservationMask* mask) {
  if (mask) mask->validate(static_cast<int>(obs.size()), length);
  for (std::size_t n = 0; n < obs.size(); ++n) {
    if (obs[n].rows() != obs_dim || obs[n].cols() != length)
      throw DimensionMismatch("sequence " + std::to_string(n) + " is " + std::to_string(obs[n].rows()) + "x" +
                              std::to_string(obs[n].cols()) + ", expected " + std::to_string(obs_dim) + "x" +
                              std::to_string(length));
    for (int t = 0; t < length; ++t)
      if ((!mask || mask->observed(n, t)) && !obs[n].col(t).allFinite())
        throw NonFinite("observation (" + std::to_string(n) + ", " + std::to_string(t) + ") is not finite");
  }
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S) {
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S + S.transpose()));
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

UniformScaling UniformScaling::fit(const Sequences& data) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : data) {
    if (s.size() == 0) continue;
    lo = std::min(lo, s.minCoeff());
    hi = std::max(hi, s.maxCoeff());
  }
  UniformScaling sc;
  if (!std::isfinite(lo)) return sc;
  sc.offset = lo;
  sc.scale = hi > lo ? hi - lo : 1.0;
  return sc;
}

Sequences UniformScaling::apply(const Sequences& data) const {
  Sequences out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back((s.array() - offset) / scale);
  return out;
}

Sequences UniformScaling::invert(const Sequences& data) const {
  Sequences out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(s.array() * scale + offset);
  return out;
}

}  // namespace stpsm
