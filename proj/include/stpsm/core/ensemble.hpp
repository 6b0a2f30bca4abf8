#pragma once

#include <Eigen/Dense>

#include "stpsm/core/point_set.hpp"

namespace stpsm {

enum class EnsembleAxis {
  inter_subject,  ///< all subjects at one timepoint (Z_t), K = N
  intra_subject,  ///< all timepoints of one subject (Z_n), K = T
};

/// Centered dM x K data matrix of one shape-space ensemble.
struct EnsembleMatrix {
  Eigen::MatrixXd Y;
  EnsembleAxis axis = EnsembleAxis::inter_subject;
  Eigen::VectorXd ensemble_mean;

  int members() const noexcept { return static_cast<int>(Y.cols()); }
};

EnsembleMatrix build_ensemble(const Cohort& aligned, EnsembleAxis axis, int index);

/// Centers an arbitrary dM x K matrix of flattened shapes.
EnsembleMatrix make_ensemble(const Eigen::MatrixXd& flattened_columns, EnsembleAxis axis);

}  // namespace stpsm
