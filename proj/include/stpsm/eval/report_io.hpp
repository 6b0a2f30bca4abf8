#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "stpsm/eval/metrics.hpp"
#include "stpsm/eval/modes.hpp"

namespace stpsm {

/// All metrics of one PDM, as one row of the comparison table.
struct ApproachSummary {
  std::string approach;
  std::vector<MetricsReport> full;     ///< per fold, then pooled
  std::vector<MetricsReport> partial;  ///< one per mask fraction
  std::optional<MetricsReport> specificity;
};

/// Long format: approach,metric,fraction,fold,trial,sequence,t,value (value = cell RMSE).
void write_metrics_csv(const std::filesystem::path& path, const std::vector<ApproachSummary>& rows);
nlohmann::json summary_json(const std::vector<ApproachSummary>& rows);
void write_summary_json(const std::filesystem::path& path, const std::vector<ApproachSummary>& rows);

/// mode,j,coordinate,value rows plus eigenvalues in a separate file.
void write_modes_csv(const std::filesystem::path& sweep_path, const std::filesystem::path& eigen_path,
                     const PcaModes& modes);

}  // namespace stpsm
