#pragma once

#include <Eigen/Dense>

#include "stpsm/core/point_set.hpp"

namespace stpsm {

/// Proper rigid motion x -> R x + t.
struct RigidTransform {
  Eigen::MatrixXd rotation;
  Eigen::VectorXd translation;

  RigidTransform() : RigidTransform(identity(3)) {}
  RigidTransform(Eigen::MatrixXd r, Eigen::VectorXd t);

  static RigidTransform identity(int dim);

  int dim() const noexcept { return static_cast<int>(rotation.rows()); }
  RigidTransform inverse() const;
  /// (*this) applied after `first`.
  RigidTransform compose(const RigidTransform& first) const;

  Eigen::VectorXd apply_point(const Eigen::VectorXd& p) const { return rotation * p + translation; }
  /// Rotates a direction (no translation).
  Eigen::VectorXd apply_vector(const Eigen::VectorXd& v) const { return rotation * v; }

  /// Orthonormal within tol and det = +1 within tol.
  bool is_proper(double tol = 1e-10) const;
};

PointSet apply_transform(const RigidTransform& transform, const PointSet& points);

}  // namespace stpsm
