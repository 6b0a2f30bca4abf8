#include "stpsm/psm/splitting.hpp"

#include <random>

#include "stpsm/core/errors.hpp"
#include "stpsm/surfaces/projection.hpp"

namespace stpsm {

bool is_power_of_two(int value) { return value > 0 && (value & (value - 1)) == 0; }

Cohort split_particles(const Cohort& pdm, const DomainGrid& domains, double offset_scale, std::uint64_t seed,
                       int projection_steps) {
  pdm.validate();
  if (pdm.dim() != 3) throw DimensionMismatch("splitting needs 3-D particles");
  if (domains.rows() != pdm.subjects() || domains.cols() != pdm.timepoints())
    throw DimensionMismatch("domain grid does not match the cohort");
  const int m_count = pdm.particles();
  if (!is_power_of_two(m_count)) throw InvalidArgument("particle count " + std::to_string(m_count) + " is not a power of two");
  if (!(offset_scale > 0.0)) throw InvalidArgument("split offset must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::Vector3d> offsets(m_count);
  for (auto& o : offsets) {
    do {
      o = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    } while (o.norm() < 1e-6);
    o *= offset_scale / o.norm();
  }

  Cohort out = pdm;
  for (int n = 0; n < pdm.subjects(); ++n) {
    for (int t = 0; t < pdm.timepoints(); ++t) {
      const ShapeDomain& domain = domains(n, t);
      const Eigen::MatrixXd& parents = pdm.at(n, t).points;
      Eigen::MatrixXd children(2 * m_count, 3);
      for (int m = 0; m < m_count; ++m) {
        const Eigen::Vector3d p = parents.row(m).transpose();
        const Eigen::Vector3d normal_dir = surface_normal(domain, p);
        Eigen::Vector3d delta = offsets[m] - normal_dir * normal_dir.dot(offsets[m]);
        // An offset parallel to the normal would collapse both children onto the parent.
        if (delta.norm() < 1e-3 * offset_scale) delta = normal_dir.unitOrthogonal();
        delta *= offset_scale / delta.norm();
        children.row(2 * m) = project_to_surface(domain, p + delta, projection_steps).transpose();
        children.row(2 * m + 1) = project_to_surface(domain, p - delta, projection_steps).transpose();
      }
      out.at(n, t).points = std::move(children);
    }
  }
  return out;
}

}  // namespace stpsm
