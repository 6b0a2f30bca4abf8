#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace stpsm {

/// Shortest round-trip decimal (never exponent) representation.
std::string format_decimal(double value);

/// One "x y z" line per particle, LF endings.
void write_particles(const std::filesystem::path& path, const Eigen::MatrixXd& points);
Eigen::MatrixXd read_particles(const std::filesystem::path& path, int dim = 3);

/// subject<n>_time<t>.particles with 1-based indices.
std::string particle_file_name(int subject, int time);

}  // namespace stpsm
