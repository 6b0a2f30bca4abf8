#pragma once

#include <filesystem>

#include "stpsm/surfaces/shape_domain.hpp"

namespace stpsm {

/// Analytic domains are JSON (`.domain`); grids use the binary `.sdfgrid` volume format
/// (text header, then little-endian float32 values).
void write_domain(const std::filesystem::path& path, const ShapeDomain& domain);
ShapeDomain read_domain(const std::filesystem::path& path);

void write_sdf_grid(const std::filesystem::path& path, const SdfGrid& grid, double surface_tol);
ShapeDomain read_sdf_grid(const std::filesystem::path& path);

}  // namespace stpsm
