#include "stpsm/surfaces/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "stpsm/core/errors.hpp"

namespace stpsm {

void SynthSpec::validate() const {
  if (n_subjects < 1) throw InvalidSpec("n_subjects must be >= 1");
  if (n_timepoints < 1) throw InvalidSpec("n_timepoints must be >= 1");
  if (truth_points < 1) throw InvalidSpec("truth_points must be >= 1");
  if (!(radii_mean.array() > 0.0).all()) throw InvalidSpec("radii_mean must be positive");
  if (!(radii_stdev.array() >= 0.0).all()) throw InvalidSpec("radii_stdev must be non-negative");
  if (!(amplitude.array().abs() < 1.0).all())
    throw InvalidSpec("amplitude components must satisfy |a| < 1 so modulated radii stay positive");
  if (!phase.allFinite()) throw InvalidSpec("phase must be finite");
  if (!(noise_stdev >= 0.0)) throw InvalidSpec("noise_stdev must be non-negative");
}

Eigen::MatrixXd unit_sphere_sample(int count) {
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  Eigen::MatrixXd dirs(count, 3);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.row(i) << r * std::cos(phi), r * std::sin(phi), z;
  }
  return dirs;
}

Eigen::Vector3d modulated_radii(const SynthSpec& spec, const Eigen::Vector3d& base, int t) {
  const double angle = 2.0 * std::numbers::pi * t / spec.n_timepoints;
  Eigen::Vector3d r;
  for (int a = 0; a < 3; ++a) r(a) = base(a) * (1.0 + spec.amplitude(a) * std::sin(angle + spec.phase(a)));
  return r;
}

SynthCohort generate_synthetic_cohort(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr int kMaxResamples = 1000;

  SynthCohort out;
  out.unit_directions = unit_sphere_sample(spec.truth_points);
  out.domains = DomainGrid(spec.n_subjects, spec.n_timepoints);
  out.radii = Grid2D<Eigen::Vector3d>(spec.n_subjects, spec.n_timepoints);
  out.truth = Cohort(spec.n_subjects, spec.n_timepoints);

  for (int n = 0; n < spec.n_subjects; ++n) {
    Eigen::Vector3d base;
    int attempts = 0;
    do {
      if (++attempts > kMaxResamples) throw InvalidSpec("cannot draw positive subject radii");
      for (int a = 0; a < 3; ++a) base(a) = spec.radii_mean(a) + spec.radii_stdev(a) * normal(rng);
    } while (!(base.array() > 0.0).all());
    out.base_radii.push_back(base);

    for (int t = 0; t < spec.n_timepoints; ++t) {
      Eigen::Vector3d r = modulated_radii(spec, base, t);
      if (spec.noise_stdev > 0.0) {
        Eigen::Vector3d noisy;
        attempts = 0;
        do {
          if (++attempts > kMaxResamples) throw InvalidSpec("cannot draw positive noisy radii");
          for (int a = 0; a < 3; ++a) noisy(a) = r(a) + spec.noise_stdev * normal(rng);
        } while (!(noisy.array() > 0.0).all());
        r = noisy;
      }
      out.radii(n, t) = r;
      out.domains(n, t) = ShapeDomain::ellipsoid(Eigen::Vector3d::Zero(), r, spec.surface_tol);
      Eigen::MatrixXd pts = out.unit_directions * r.asDiagonal();
      out.truth.at(n, t) = PointSet(std::move(pts), n * spec.n_timepoints + t);
    }
  }
  return out;
}

}  // namespace stpsm
