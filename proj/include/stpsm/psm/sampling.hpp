#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stpsm/core/point_set.hpp"
#include "stpsm/psm/optimizer_config.hpp"
#include "stpsm/surfaces/shape_domain.hpp"

namespace stpsm {

/// Indices of the k nearest other particles, ties broken by lowest index.
std::vector<int> nearest_neighbors(const Eigen::MatrixXd& points, int index, int k);

/// Adaptive bandwidth: distance to the ceil(k/2)-th neighbor, clamped to the kernel bounds.
double adaptive_sigma(const Eigen::MatrixXd& points, int index, const std::vector<int>& neighbors,
                      const SamplingKernel& kernel);

/// Repulsive update for one particle: sum_j w_j (x_i - x_j) over its neighbors with
/// normalized Gaussian weights, clamped to length sigma_i. This is sigma_i^2 times the
/// ascent direction of the particle's Parzen entropy term.
Eigen::VectorXd sampling_update(const Eigen::MatrixXd& points, int index, const SamplingKernel& kernel);

/// Same update with the bandwidth held at `sigma` instead of the adaptive value.
Eigen::VectorXd sampling_update(const Eigen::MatrixXd& points, int index, const SamplingKernel& kernel, double sigma);

/// Adaptive bandwidth of every particle.
Eigen::VectorXd adaptive_bandwidths(const Eigen::MatrixXd& points, const SamplingKernel& kernel);

/// M x d updates for every particle (all from the same positions). Throws
/// DegenerateConfiguration when every particle coincides.
Eigen::MatrixXd sampling_gradient(const PointSet& shape, const OptimizerConfig& config);
/// Same, with each update projected onto the tangent plane of `domain`.
Eigen::MatrixXd sampling_gradient(const PointSet& shape, const OptimizerConfig& config, const ShapeDomain& domain);

/// Parzen-window entropy estimate -1/M sum_i log p(x_i) with the same adaptive kernel.
double sampling_entropy(const Eigen::MatrixXd& points, const SamplingKernel& kernel);
/// Same estimate with per-particle bandwidths held fixed (empty selects adaptive).
double sampling_entropy(const Eigen::MatrixXd& points, const SamplingKernel& kernel, const Eigen::VectorXd& sigmas);

}  // namespace stpsm
