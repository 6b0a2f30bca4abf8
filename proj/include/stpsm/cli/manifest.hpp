#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stpsm/core/grid.hpp"
#include "stpsm/core/point_set.hpp"
#include "stpsm/surfaces/shape_domain.hpp"

namespace stpsm {

/// Index of a cohort on disk. Paths are stored relative to the manifest's directory.
struct Manifest {
  std::vector<std::string> subjects;
  std::vector<std::string> times;
  Grid2D<std::filesystem::path> domains;
  std::optional<Grid2D<std::filesystem::path>> particles;
  std::string kind;
  std::string mode;
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
/// Returned paths are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);

DomainGrid load_domains(const Manifest& manifest);
/// Throws IoError when the manifest lists no particles.
Cohort load_particles(const Manifest& manifest);

}  // namespace stpsm
