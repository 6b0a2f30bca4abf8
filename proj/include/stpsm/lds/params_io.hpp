#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "stpsm/lds/params.hpp"

namespace stpsm {

struct LdsModelFile {
  LdsParams params;
  std::optional<UniformScaling> scaling;
};

nlohmann::json params_to_json(const LdsParams& params, const std::optional<UniformScaling>& scaling = std::nullopt);
LdsModelFile params_from_json(const nlohmann::json& j);

/// JSON container: every array stored as {"shape": [...], "data": [...]} in column-major order.
void write_params(const std::filesystem::path& path, const LdsParams& params,
                  const std::optional<UniformScaling>& scaling = std::nullopt);
LdsModelFile read_params(const std::filesystem::path& path);

}  // namespace stpsm
