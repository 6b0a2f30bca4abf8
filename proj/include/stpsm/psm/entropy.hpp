#pragma once

#include <Eigen/Dense>

#include "stpsm/core/ensemble.hpp"

namespace stpsm {

/// Regularized Gaussian entropy of a centered ensemble:
///   H = 1/2 * sum_{i=1}^{K-1} log(lambda_i + alpha)
/// with lambda_i the leading K-1 eigenvalues of the Gram matrix Y^T Y (equal to the
/// nonzero spectrum of the scatter Y Y^T). Single-member ensembles have zero entropy.
double shape_entropy(const Eigen::MatrixXd& Y, double alpha);
double shape_entropy(const EnsembleMatrix& ensemble, double alpha);

/// Y (Y^T Y + alpha I)^{-1}: column j is dH/dx_j for ensemble member j, so
/// descending on the entropy moves each member against its column.
Eigen::MatrixXd correspondence_gradient(const Eigen::MatrixXd& Y, double alpha);
Eigen::MatrixXd correspondence_gradient(const EnsembleMatrix& ensemble, double alpha);

/// Leading K-1 Gram eigenvalues, non-increasing, clipped at zero.
Eigen::VectorXd ensemble_spectrum(const Eigen::MatrixXd& Y);

}  // namespace stpsm
