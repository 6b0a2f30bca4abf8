#include "stpsm/surfaces/projection.hpp"

#include <cmath>

#include "stpsm/core/errors.hpp"

namespace stpsm {

Eigen::Vector3d project_to_surface(const ShapeDomain& domain, const Eigen::Vector3d& p, int max_steps) {
  Eigen::Vector3d x = p;
  const double tol = domain.surface_tol();
  for (int step = 0; step <= max_steps; ++step) {
    const SdfSample s = domain.evaluate(x);
    if (std::abs(s.value) <= tol) return x;
    if (step == max_steps) break;
    const double g2 = s.gradient.squaredNorm();
    if (!(g2 >= 1e-12)) throw ProjectionFailure("vanishing sdf gradient during projection");
    Eigen::Vector3d move = (s.value / g2) * s.gradient;
    // Weak gradients deep inside sampled volumes can overshoot the grid; back off until inside.
    for (int shrink = 0; shrink < 60 && !domain.bounds().contains(x - move); ++shrink) move *= 0.5;
    x -= move;
  }
  throw ProjectionFailure("no convergence to the surface within " + std::to_string(max_steps) + " steps");
}

Eigen::Vector3d surface_normal(const ShapeDomain& domain, const Eigen::Vector3d& p) {
  const Eigen::Vector3d g = domain.evaluate(p).gradient;
  const double n = g.norm();
  if (!(n > 0.0)) throw ProjectionFailure("vanishing sdf gradient");
  return g / n;
}

}  // namespace stpsm
