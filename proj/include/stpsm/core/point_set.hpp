#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stpsm/core/grid.hpp"

namespace stpsm {

/// M particles in d dimensions, one per row.
struct PointSet {
  Eigen::MatrixXd points;
  int domain_id = -1;

  PointSet() = default;
  explicit PointSet(Eigen::MatrixXd pts, int domain = -1) : points(std::move(pts)), domain_id(domain) {}

  int size() const noexcept { return static_cast<int>(points.rows()); }
  int dim() const noexcept { return static_cast<int>(points.cols()); }
  bool all_finite() const { return points.allFinite(); }

  /// Point-major flattening: (x,y,z) of particle 1, then particle 2, ...
  Eigen::VectorXd flatten() const;
  static PointSet unflatten(const Eigen::VectorXd& flat, int dim, int domain = -1);
};

/// N subjects by T timepoints of corresponding point sets.
struct Cohort {
  Grid2D<PointSet> shapes;
  std::vector<std::string> subject_ids;
  std::vector<std::string> time_labels;

  Cohort() = default;
  Cohort(int n_subjects, int n_timepoints);

  int subjects() const noexcept { return shapes.rows(); }
  int timepoints() const noexcept { return shapes.cols(); }
  int particles() const;
  int dim() const;

  PointSet& at(int n, int t) { return shapes.at(n, t); }
  const PointSet& at(int n, int t) const { return shapes.at(n, t); }

  /// Throws DimensionMismatch unless every cell shares M and d and is finite.
  void validate() const;
};

/// Sequences as D x T matrices, one per subject, built from flattened point sets.
std::vector<Eigen::MatrixXd> to_sequences(const Cohort& cohort);
Cohort from_sequences(const std::vector<Eigen::MatrixXd>& sequences, int dim);

}  // namespace stpsm
