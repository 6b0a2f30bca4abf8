#include "stpsm/core/rigid_transform.hpp"

#include <cmath>

#include "stpsm/core/errors.hpp"

namespace stpsm {

RigidTransform::RigidTransform(Eigen::MatrixXd r, Eigen::VectorXd t) : rotation(std::move(r)), translation(std::move(t)) {
  if (rotation.rows() != rotation.cols() || rotation.rows() != translation.size())
    throw DimensionMismatch("rotation and translation dimensions disagree");
}

RigidTransform RigidTransform::identity(int dim) {
  return RigidTransform(Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim));
}

RigidTransform RigidTransform::inverse() const {
  Eigen::MatrixXd rt = rotation.transpose();
  Eigen::VectorXd t = -(rt * translation);
  return RigidTransform(std::move(rt), std::move(t));
}

RigidTransform RigidTransform::compose(const RigidTransform& first) const {
  return RigidTransform(rotation * first.rotation, rotation * first.translation + translation);
}

bool RigidTransform::is_proper(double tol) const {
  const int d = dim();
  const double ortho = (rotation.transpose() * rotation - Eigen::MatrixXd::Identity(d, d)).norm();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

PointSet apply_transform(const RigidTransform& transform, const PointSet& points) {
  if (transform.dim() != points.dim())
    throw DimensionMismatch("transform is " + std::to_string(transform.dim()) + "-D, points are " +
                            std::to_string(points.dim()) + "-D");
  Eigen::MatrixXd out = points.points * transform.rotation.transpose();
  out.rowwise() += transform.translation.transpose();
  return PointSet(std::move(out), points.domain_id);
}

}  // namespace stpsm
