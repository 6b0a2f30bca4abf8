#include "stpsm/surfaces/domain_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stpsm/core/errors.hpp"

namespace stpsm {

namespace {

constexpr const char* kGridMagic = "STPSM_SDF_GRID 1";

nlohmann::json vec_json(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

Eigen::Vector3d json_vec(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw IoError(std::string("domain field '") + key + "' must be a 3-vector");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

}  // namespace

void write_sdf_grid(const std::filesystem::path& path, const SdfGrid& grid, double surface_tol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  std::ostringstream header;
  header.precision(17);
  header << kGridMagic << '\n'
         << "dims " << grid.dims[0] << ' ' << grid.dims[1] << ' ' << grid.dims[2] << '\n'
         << "spacing " << grid.spacing(0) << ' ' << grid.spacing(1) << ' ' << grid.spacing(2) << '\n'
         << "origin " << grid.origin(0) << ' ' << grid.origin(1) << ' ' << grid.origin(2) << '\n'
         << "surface_tol " << surface_tol << '\n'
         << "data float32_le\n";
  out << header.str();
  for (float v : grid.values) {
    const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ShapeDomain read_sdf_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kGridMagic) throw IoError(path.string() + ": not an sdf grid file");
  SdfGrid grid;
  double surface_tol = 0.0;
  bool have_dims = false;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "dims") {
      fields >> grid.dims[0] >> grid.dims[1] >> grid.dims[2];
      have_dims = true;
    } else if (key == "spacing") {
      fields >> grid.spacing(0) >> grid.spacing(1) >> grid.spacing(2);
    } else if (key == "origin") {
      fields >> grid.origin(0) >> grid.origin(1) >> grid.origin(2);
    } else if (key == "surface_tol") {
      fields >> surface_tol;
    } else if (key == "data") {
      std::string encoding;
      fields >> encoding;
      if (encoding != "float32_le") throw IoError(path.string() + ": unsupported encoding " + encoding);
      break;
    } else {
      throw IoError(path.string() + ": unknown header key '" + key + "'");
    }
    if (fields.fail()) throw IoError(path.string() + ": malformed header line '" + line + "'");
  }
  if (!have_dims || grid.dims[0] <= 0 || grid.dims[1] <= 0 || grid.dims[2] <= 0)
    throw IoError(path.string() + ": missing dims");
  const std::size_t count = static_cast<std::size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  grid.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) throw IoError(path.string() + ": truncated data");
    grid.values[i] = std::bit_cast<float>(to_little_endian(bits));
  }
  return ShapeDomain::grid(std::move(grid), surface_tol);
}

void write_domain(const std::filesystem::path& path, const ShapeDomain& domain) {
  if (const auto* g = std::get_if<SdfGrid>(&domain.kind())) {
    write_sdf_grid(path, *g, domain.surface_tol());
    return;
  }
  nlohmann::json j;
  if (const auto* s = std::get_if<Sphere>(&domain.kind())) {
    j = {{"kind", "sphere"}, {"center", vec_json(s->center)}, {"radius", s->radius}};
  } else {
    const auto& e = std::get<Ellipsoid>(domain.kind());
    j = {{"kind", "ellipsoid"}, {"center", vec_json(e.center)}, {"radii", vec_json(e.radii)}};
  }
  j["surface_tol"] = domain.surface_tol();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

ShapeDomain read_domain(const std::filesystem::path& path) {
  if (path.extension() == ".sdfgrid") return read_sdf_grid(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    const std::string kind = j.at("kind").get<std::string>();
    const double tol = j.value("surface_tol", 0.0);
    if (kind == "sphere") return ShapeDomain::sphere(json_vec(j, "center"), j.at("radius").get<double>(), tol);
    if (kind == "ellipsoid") return ShapeDomain::ellipsoid(json_vec(j, "center"), json_vec(j, "radii"), tol);
    throw IoError(path.string() + ": unknown domain kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace stpsm
