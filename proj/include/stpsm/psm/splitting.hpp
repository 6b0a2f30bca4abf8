#pragma once

#include <cstdint>

#include "stpsm/core/point_set.hpp"
#include "stpsm/surfaces/shape_domain.hpp"

namespace stpsm {

/// Doubles M. Children 2m and 2m+1 sit at parent +/- delta_m, where delta_m is one random
/// vector of length offset_scale per particle index (shared by every cell), flattened into
/// each cell's tangent plane, then projected to the surface.
Cohort split_particles(const Cohort& pdm, const DomainGrid& domains, double offset_scale, std::uint64_t seed,
                       int projection_steps = 100);

bool is_power_of_two(int value);

}  // namespace stpsm
