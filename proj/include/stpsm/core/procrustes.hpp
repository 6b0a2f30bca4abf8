#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stpsm/core/grid.hpp"
#include "stpsm/core/point_set.hpp"
#include "stpsm/core/rigid_transform.hpp"

namespace stpsm {

struct ProcrustesOptions {
  int max_iters = 100;
  /// Frobenius change of the mean shape that counts as converged.
  double tol = 1e-8;
  /// Similarity alignment. Scale factors are reported separately; transforms stay rigid.
  bool allow_scaling = false;
};

struct ProcrustesResult {
  Grid2D<RigidTransform> transforms;
  Cohort aligned;
  Eigen::MatrixXd mean_shape;
  /// Per-cell isotropic scale, all ones unless allow_scaling.
  Grid2D<double> scales;
  /// Sum of squared distances of aligned sets to the mean, one entry per iteration.
  std::vector<double> objective_trace;
  int iterations = 0;
  /// False when max_iters was hit first. A warning, not a failure.
  bool converged = false;
};

/// Proper rotation R minimizing sum ||R a_i - b_i||^2 for centered rows of a and b.
Eigen::MatrixXd optimal_rotation(const Eigen::MatrixXd& source_centered, const Eigen::MatrixXd& target_centered);

/// Generalized Procrustes alignment of every cell to the evolving mean shape.
ProcrustesResult procrustes_align(const Cohort& cohort, const ProcrustesOptions& options = {});

}  // namespace stpsm
