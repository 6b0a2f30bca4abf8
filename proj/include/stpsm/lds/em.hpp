#pragma once

#include <cstdint>
#include <vector>

#include "stpsm/lds/kalman.hpp"
#include "stpsm/lds/params.hpp"

namespace stpsm {

struct EmOptions {
  int latent_dim = 64;
  int iterations = 50;
  std::uint64_t init_seed = 0;
  /// Relative ridge added to every M-step normal matrix (scaled by its mean diagonal).
  double ridge = 1e-8;
  /// Observation-noise floor relative to the average per-coordinate data variance.
  double obs_var_floor = 1e-8;
};

struct EmResult {
  LdsParams params;
  /// loglik_trace[i] is the log-likelihood of the parameters after iteration i + 1,
  /// so the last entry belongs to the returned parameters.
  std::vector<double> loglik_trace;
};

/// Deterministic starting point: principal directions shared across t, A = I,
/// state_cov = 0.1 I, obs_var from residual variance, prior from t = 1 projections.
LdsParams initialize_params(const Sequences& obs, int latent_dim, std::uint64_t seed,
                            const ObservationMask* mask = nullptr);

/// One M-step from smoothed moments.
LdsParams m_step(const LdsParams& current, const Sequences& obs, const PosteriorMoments& moments,
                 const EmOptions& options, const ObservationMask* mask = nullptr);

/// Expectation maximization. Throws InvalidArgument for iterations < 1 or fewer than
/// two sequences, and RankDeficientStatistics when a per-t normal matrix stays singular.
EmResult em_fit(const Sequences& obs, const EmOptions& options, const ObservationMask* mask = nullptr);

}  // namespace stpsm
