#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "stpsm/core/point_set.hpp"
#include "stpsm/surfaces/shape_domain.hpp"

namespace stpsm {

/// Cohort of axis-aligned ellipsoids. Subject radii are drawn once, then modulated
/// over one full sinusoidal period across the T frames.
struct SynthSpec {
  int n_subjects = 8;
  int n_timepoints = 10;
  Eigen::Vector3d radii_mean{1.0, 0.8, 0.6};
  Eigen::Vector3d radii_stdev{0.1, 0.08, 0.06};
  Eigen::Vector3d amplitude{0.2, 0.0, 0.0};
  Eigen::Vector3d phase{0.0, 0.0, 0.0};
  double noise_stdev = 0.0;
  std::uint64_t seed = 0;
  int truth_points = 64;
  /// <= 0 selects the domain default.
  double surface_tol = 0.0;

  /// Throws InvalidSpec.
  void validate() const;
};

struct SynthCohort {
  DomainGrid domains;
  Cohort truth;
  std::vector<Eigen::Vector3d> base_radii;
  Grid2D<Eigen::Vector3d> radii;
  /// truth_points x 3 unit vectors shared by every cell.
  Eigen::MatrixXd unit_directions;
};

/// Deterministic spiral sample of the unit sphere.
Eigen::MatrixXd unit_sphere_sample(int count);

/// Radii of cell (n, t) given the subject's base radii.
Eigen::Vector3d modulated_radii(const SynthSpec& spec, const Eigen::Vector3d& base, int t);

SynthCohort generate_synthetic_cohort(const SynthSpec& spec);

}  // namespace stpsm
