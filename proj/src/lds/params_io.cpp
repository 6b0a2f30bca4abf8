#include "stpsm/lds/params_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "stpsm/core/errors.hpp"

namespace stpsm {

namespace {

using json = nlohmann::json;

json array_json(const Eigen::MatrixXd& m) {
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd array_from(const json& j) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 || static_cast<std::size_t>(shape[0] * shape[1]) != data.size())
    throw IoError("array shape does not match its data");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), shape[0], shape[1]);
}

}  // namespace

nlohmann::json params_to_json(const LdsParams& params, const std::optional<UniformScaling>& scaling) {
  json a = json::array(), w = json::array();
  for (const auto& m : params.A) a.push_back(array_json(m));
  for (const auto& m : params.W) w.push_back(array_json(m));
  json j = {{"format", "stpsm-lds-params"},
            {"version", 1},
            {"latent_dim", params.latent_dim()},
            {"obs_dim", params.obs_dim()},
            {"length", params.length()},
            {"A", a},
            {"W", w},
            {"state_cov", array_json(params.state_cov)},
            {"obs_var", array_json(params.obs_var)},
            {"prior_mean", array_json(params.prior_mean)},
            {"prior_cov", array_json(params.prior_cov)}};
  if (scaling) j["scaling"] = {{"kind", "uniform_min_max"}, {"offset", scaling->offset}, {"scale", scaling->scale}};
  return j;
}

LdsModelFile params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "stpsm-lds-params") throw IoError("not an LDS parameter file");
    LdsModelFile f;
    for (const auto& m : j.at("A")) f.params.A.push_back(array_from(m));
    for (const auto& m : j.at("W")) f.params.W.push_back(array_from(m));
    f.params.state_cov = array_from(j.at("state_cov"));
    f.params.obs_var = array_from(j.at("obs_var")).reshaped();
    f.params.prior_mean = array_from(j.at("prior_mean")).reshaped();
    f.params.prior_cov = array_from(j.at("prior_cov"));
    if (j.contains("scaling")) f.scaling = UniformScaling{j["scaling"].at("offset"), j["scaling"].at("scale")};
    f.params.validate();
    return f;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed LDS parameter file: ") + e.what());
  }
}

void write_params(const std::filesystem::path& path, const LdsParams& params, const std::optional<UniformScaling>& scaling) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << params_to_json(params, scaling).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

LdsModelFile read_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
  return params_from_json(j);
}

}  // namespace stpsm
