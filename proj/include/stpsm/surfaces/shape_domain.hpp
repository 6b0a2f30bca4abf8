#pragma once

#include <array>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "stpsm/core/grid.hpp"

namespace stpsm {

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

/// Axis-aligned ellipsoid with semi-axes `radii`.
struct Ellipsoid {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d radii = Eigen::Vector3d::Ones();
};

/// Sampled signed distance volume, x-fastest storage, trilinear interpolation.
struct SdfGrid {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  std::vector<float> values;

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(dims[0]) * (j + static_cast<std::size_t>(dims[1]) * k);
  }
};

struct Box {
  Eigen::Vector3d lower = Eigen::Vector3d::Zero();
  Eigen::Vector3d upper = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lower.array()).all() && (p.array() <= upper.array()).all();
  }
  double diagonal() const { return (upper - lower).norm(); }
};

struct SdfSample {
  double value = 0.0;  ///< negative inside
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};

class ShapeDomain {
 public:
  using Kind = std::variant<Sphere, Ellipsoid, SdfGrid>;

  /// Unit sphere at the origin.
  ShapeDomain();

  /// surface_tol <= 0 selects the default of 1e-4 times the shape box diagonal.
  static ShapeDomain sphere(const Eigen::Vector3d& center, double radius, double surface_tol = 0.0);
  static ShapeDomain ellipsoid(const Eigen::Vector3d& center, const Eigen::Vector3d& radii, double surface_tol = 0.0);
  static ShapeDomain grid(SdfGrid grid, double surface_tol = 0.0);

  /// Throws OutOfBounds outside bounds().
  SdfSample evaluate(const Eigen::Vector3d& p) const;

  /// Region on which evaluate() is defined.
  const Box& bounds() const noexcept { return bounds_; }
  /// Tight box around the enclosed shape.
  const Box& shape_box() const noexcept { return shape_box_; }
  double diagonal() const { return shape_box_.diagonal(); }
  double surface_tol() const noexcept { return surface_tol_; }
  const Eigen::Vector3d& centroid() const noexcept { return centroid_; }
  const Kind& kind() const noexcept { return kind_; }
  bool is_analytic() const noexcept { return !std::holds_alternative<SdfGrid>(kind_); }

 private:
  ShapeDomain(Kind kind, double surface_tol);

  Kind kind_;
  Box bounds_;
  Box shape_box_;
  Eigen::Vector3d centroid_ = Eigen::Vector3d::Zero();
  double surface_tol_ = 0.0;
};

using DomainGrid = Grid2D<ShapeDomain>;

SdfSample sdf_eval(const ShapeDomain& domain, const Eigen::Vector3d& p);

/// Exact closest point on an axis-aligned ellipsoid (bisection on the Lagrange root).
Eigen::Vector3d closest_point_on_ellipsoid(const Ellipsoid& e, const Eigen::Vector3d& p);

/// Samples any domain's signed distance on a regular grid covering `box`.
SdfGrid sample_grid(const ShapeDomain& domain, double spacing, const Box& box);

}  // namespace stpsm
