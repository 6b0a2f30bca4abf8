#include "stpsm/core/particle_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "stpsm/core/errors.hpp"

namespace stpsm {

std::string format_decimal(double value) {
  char buffer[512];
  const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::fixed);
  if (res.ec != std::errc()) throw IoError("cannot format value");
  return std::string(buffer, res.ptr);
}

void write_particles(const std::filesystem::path& path, const Eigen::MatrixXd& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (Eigen::Index m = 0; m < points.rows(); ++m) {
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      if (i > 0) out << ' ';
      out << format_decimal(points(m, i));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Eigen::MatrixXd read_particles(const std::filesystem::path& path, int dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    int count = 0;
    double v = 0.0;
    while (fields >> v) {
      values.push_back(v);
      ++count;
    }
    if (count != dim || !fields.eof())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                    " coordinates");
  }
  const auto rows = static_cast<Eigen::Index>(values.size() / dim);
  Eigen::MatrixXd points(rows, dim);
  for (Eigen::Index m = 0; m < rows; ++m)
    for (int i = 0; i < dim; ++i) points(m, i) = values[m * dim + i];
  return points;
}

std::string particle_file_name(int subject, int time) {
  return "subject" + std::to_string(subject + 1) + "_time" + std::to_string(time + 1) + ".particles";
}

}  // namespace stpsm
