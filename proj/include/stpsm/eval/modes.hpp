#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stpsm/core/point_set.hpp"

namespace stpsm {

struct PcaModes {
  Eigen::VectorXd mean_shape;
  /// One orthonormal column per mode, largest eigenvalue first.
  Eigen::MatrixXd modes;
  Eigen::VectorXd eigenvalues;
  /// sweep[k][j] = mean + (j - 2) sqrt(lambda_k) mode_k for j = 0..4.
  std::vector<std::vector<Eigen::VectorXd>> sweep;
  double total_variance = 0.0;
};

/// PCA over every flattened point set of the cohort, pooled over subjects and time.
/// Returns at most min(k, N T - 1, D) modes. Each mode's largest-magnitude entry is positive.
/// Throws DegenerateEnsemble for fewer than two shapes or zero variance.
PcaModes modes_of_variation(const Cohort& pdm, int k);

}  // namespace stpsm
