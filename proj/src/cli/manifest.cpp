#include "stpsm/cli/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "stpsm/core/errors.hpp"
#include "stpsm/core/particle_io.hpp"
#include "stpsm/surfaces/domain_io.hpp"

namespace stpsm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json path_grid(const Grid2D<fs::path>& grid, const fs::path& base) {
  json rows = json::array();
  for (int n = 0; n < grid.rows(); ++n) {
    json row = json::array();
    for (int t = 0; t < grid.cols(); ++t) {
      const fs::path abs = fs::absolute(grid(n, t)).lexically_normal();
      row.push_back(abs.lexically_relative(base).generic_string());
    }
    rows.push_back(row);
  }
  return rows;
}

Grid2D<fs::path> grid_from(const json& rows, int n_count, int t_count, const fs::path& base, const char* what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != n_count)
    throw IoError(std::string("manifest ") + what + " must have one row per subject");
  Grid2D<fs::path> grid(n_count, t_count);
  for (int n = 0; n < n_count; ++n) {
    if (!rows[n].is_array() || static_cast<int>(rows[n].size()) != t_count)
      throw IoError(std::string("manifest ") + what + " must have one entry per timepoint");
    for (int t = 0; t < t_count; ++t) grid(n, t) = base / rows[n][t].get<std::string>();
  }
  return grid;
}

}  // namespace

void write_manifest(const fs::path& path, const Manifest& m) {
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();
  json j = {{"format", "stpsm-manifest"},
            {"version", 1},
            {"kind", m.kind},
            {"subjects", m.subjects},
            {"times", m.times},
            {"domains", path_grid(m.domains, base)}};
  if (!m.mode.empty()) j["mode"] = m.mode;
  if (m.particles) j["particles"] = path_grid(*m.particles, base);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  try {
    json j;
    in >> j;
    if (j.at("format") != "stpsm-manifest") throw IoError(path.string() + " is not a cohort manifest");
    Manifest m;
    m.kind = j.value("kind", "");
    m.mode = j.value("mode", "");
    m.subjects = j.at("subjects").get<std::vector<std::string>>();
    m.times = j.at("times").get<std::vector<std::string>>();
    const int n_count = static_cast<int>(m.subjects.size()), t_count = static_cast<int>(m.times.size());
    if (n_count < 1 || t_count < 1) throw IoError("manifest lists no shapes");
    const fs::path base = fs::absolute(path).parent_path();
    m.domains = grid_from(j.at("domains"), n_count, t_count, base, "domains");
    if (j.contains("particles")) m.particles = grid_from(j.at("particles"), n_count, t_count, base, "particles");
    return m;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
}

DomainGrid load_domains(const Manifest& m) {
  DomainGrid grid(m.domains.rows(), m.domains.cols());
  for (int n = 0; n < grid.rows(); ++n)
    for (int t = 0; t < grid.cols(); ++t) grid(n, t) = read_domain(m.domains(n, t));
  return grid;
}

Cohort load_particles(const Manifest& m) {
  if (!m.particles) throw IoError("manifest lists no particle files");
  Cohort c(m.particles->rows(), m.particles->cols());
  c.subject_ids = m.subjects;
  c.time_labels = m.times;
  for (int n = 0; n < c.subjects(); ++n)
    for (int t = 0; t < c.timepoints(); ++t)
      c.at(n, t) = PointSet(read_particles((*m.particles)(n, t)), n * c.timepoints() + t);
  c.validate();
  return c;
}

}  // namespace stpsm
