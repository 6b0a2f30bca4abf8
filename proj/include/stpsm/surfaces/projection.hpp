#pragma once

#include <Eigen/Dense>

#include "stpsm/surfaces/shape_domain.hpp"

namespace stpsm {

/// Newton iteration p <- p - value * grad / |grad|^2 until |value| <= surface_tol.
/// Throws ProjectionFailure when max_steps is exhausted or the gradient vanishes.
Eigen::Vector3d project_to_surface(const ShapeDomain& domain, const Eigen::Vector3d& p, int max_steps = 100);

/// Outward unit normal at p.
Eigen::Vector3d surface_normal(const ShapeDomain& domain, const Eigen::Vector3d& p);

}  // namespace stpsm
