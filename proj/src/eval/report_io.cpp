#include "stpsm/eval/report_io.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "stpsm/core/errors.hpp"
#include "stpsm/core/particle_io.hpp"

namespace stpsm {

namespace {

using json = nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_cells(std::ostream& out, const std::string& approach, const MetricsReport& r) {
  const std::string metric = to_string(r.metric_kind);
  const std::string fraction = r.mask_fraction ? format_decimal(*r.mask_fraction) : "";
  for (const CellError& c : r.cells)
    out << approach << ',' << metric << ',' << fraction << ',' << c.fold << ',' << c.trial << ',' << c.sequence << ','
        << c.t << ',' << format_decimal(c.value) << '\n';
}

json value_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const MetricsReport& r) {
  json per_t = json::array();
  for (double v : r.per_timepoint_rmse) per_t.push_back(std::isnan(v) ? json(nullptr) : json(v));
  json j = {{"metric", to_string(r.metric_kind)},
            {"rmse", value_or_null(r.overall_rmse)},
            {"std", r.overall_rmse ? json(r.overall_std) : json(nullptr)},
            {"per_timepoint_rmse", per_t}};
  if (r.mask_fraction) j["mask_fraction"] = *r.mask_fraction;
  if (r.metric_kind == MetricKind::specificity) j["n_samples"] = r.n_samples;
  if (r.fold_id >= 0) j["fold"] = r.fold_id;
  return j;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const std::vector<ApproachSummary>& rows) {
  auto out = open_out(path);
  out << "approach,metric,fraction,fold,trial,sequence,t,value\n";
  for (const auto& row : rows) {
    // Only the pooled full-sequence report; fold reports hold the same cells.
    if (!row.full.empty()) write_cells(out, row.approach, row.full.back());
    for (const auto& r : row.partial) write_cells(out, row.approach, r);
    if (row.specificity) write_cells(out, row.approach, *row.specificity);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json summary_json(const std::vector<ApproachSummary>& rows) {
  json table = json::array();
  for (const auto& row : rows) {
    json j = {{"approach", row.approach}};
    if (!row.full.empty()) {
      j["full_sequence"] = report_json(row.full.back());
      json folds = json::array();
      for (std::size_t i = 0; i + 1 < row.full.size(); ++i) folds.push_back(report_json(row.full[i]));
      j["full_sequence"]["folds"] = folds;
    }
    json partial = json::array();
    for (const auto& r : row.partial) partial.push_back(report_json(r));
    j["partial_sequence"] = partial;
    j["specificity"] = row.specificity ? report_json(*row.specificity) : json(nullptr);
    table.push_back(j);
  }
  return {{"format", "stpsm-metrics-summary"}, {"version", 1}, {"rows", table}};
}

void write_summary_json(const std::filesystem::path& path, const std::vector<ApproachSummary>& rows) {
  auto out = open_out(path);
  out << summary_json(rows).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_modes_csv(const std::filesystem::path& sweep_path, const std::filesystem::path& eigen_path,
                     const PcaModes& modes) {
  auto sweep = open_out(sweep_path);
  sweep << "mode,multiple,coordinate,value\n";
  for (std::size_t k = 0; k < modes.sweep.size(); ++k)
    for (std::size_t j = 0; j < modes.sweep[k].size(); ++j)
      for (Eigen::Index i = 0; i < modes.sweep[k][j].size(); ++i)
        sweep << k + 1 << ',' << static_cast<int>(j) - 2 << ',' << i << ',' << format_decimal(modes.sweep[k][j](i)) << '\n';
  auto eig = open_out(eigen_path);
  eig << "mode,eigenvalue,explained_fraction\n";
  for (Eigen::Index k = 0; k < modes.eigenvalues.size(); ++k)
    eig << k + 1 << ',' << format_decimal(modes.eigenvalues(k)) << ','
        << format_decimal(modes.eigenvalues(k) / modes.total_variance) << '\n';
  if (!sweep || !eig) throw IoError("failed writing mode tables");
}

}  // namespace stpsm
