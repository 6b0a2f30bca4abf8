#include "stpsm/lds/inference.hpp"

#include <random>

#include "stpsm/core/errors.hpp"
#include "stpsm/lds/kalman.hpp"

namespace stpsm {

Sequences reconstruct(const LdsParams& params, const Sequences& obs, const ObservationMask* mask) {
  const PosteriorMoments pm = e_step(params, obs, mask);
  Sequences out(obs.size());
  for (std::size_t n = 0; n < obs.size(); ++n) {
    out[n].resize(params.obs_dim(), params.length());
    for (int t = 0; t < params.length(); ++t) out[n].col(t) = params.W[t] * pm.smoothed_mean[n][t];
  }
  return out;
}

Sequences sample(const LdsParams& params, int n_sequences, std::uint64_t seed) {
  params.validate();
  if (n_sequences < 0) throw InvalidArgument("sample count must be non-negative");
  const int l = params.latent_dim(), d = params.obs_dim(), t_count = params.length();
  const Eigen::MatrixXd prior_f = psd_factor(params.prior_cov), state_f = psd_factor(params.state_cov);
  const Eigen::VectorXd obs_sd = params.obs_var.cwiseMax(0.0).cwiseSqrt();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](int size) {
    Eigen::VectorXd z(size);
    for (int i = 0; i < size; ++i) z(i) = normal(rng);
    return z;
  };
  Sequences out(n_sequences);
  for (int n = 0; n < n_sequences; ++n) {
    out[n].resize(d, t_count);
    Eigen::VectorXd s = params.prior_mean + prior_f * draw(l);
    for (int t = 0; t < t_count; ++t) {
      if (t > 0) s = params.A[t] * s + state_f * draw(l);
      out[n].col(t) = params.W[t] * s + obs_sd.cwiseProduct(draw(d));
    }
  }
  return out;
}

}  // namespace stpsm
