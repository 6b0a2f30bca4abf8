#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stpsm/lds/em.hpp"
#include "stpsm/lds/params.hpp"

namespace stpsm {

enum class MetricKind { full_generalization, partial_reconstruction, specificity };
std::string to_string(MetricKind kind);

/// Error of one (sequence, t) cell: RMSE over its D scored coordinates.
struct CellError {
  int fold = 0;
  int trial = 0;
  int sequence = 0;
  int t = 0;
  double value = 0.0;
};

struct MetricsReport {
  MetricKind metric_kind = MetricKind::full_generalization;
  /// -1 for a report pooled over folds.
  int fold_id = -1;
  std::optional<double> mask_fraction;
  int n_samples = 0;
  /// Pooled RMSE per timepoint; NaN where nothing was scored.
  std::vector<double> per_timepoint_rmse;
  /// Absent when nothing was scored (a mask fraction that hides no frame).
  std::optional<double> overall_rmse;
  double overall_std = 0.0;
  std::vector<double> per_sequence_rmse;
  std::vector<CellError> cells;
};

/// sqrt(1/(N T D) sum (x - x_hat)^2). Throws ShapeMismatch.
double rmse(const Sequences& x, const Sequences& xhat);

/// Subject-level partition: a seeded shuffle dealt round-robin into `folds` test sets.
std::vector<std::vector<int>> fold_splits(int n_subjects, int folds, std::uint64_t seed);

/// Builds a report from scored cells. For generalization and reconstruction the overall
/// value is the pooled RMSE and the spread is the std of per-sequence RMSEs; for
/// specificity both come from the per-sample nearest-sequence distances.
MetricsReport summarize(MetricKind kind, std::vector<CellError> cells, int length);

/// Fits on each fold's training subjects and reconstructs the held-out sequences.
/// Returns one report per fold followed by the pooled report (fold_id -1).
std::vector<MetricsReport> full_sequence_generalization(const Sequences& data, int folds, const EmOptions& fit,
                                                        std::uint64_t seed);

/// Masks floor(fraction * T) frames (never the first, at most T - 1) of every held-out
/// sequence per trial and scores the reconstruction. One pooled report per fraction.
/// score_full scores every frame instead of only the masked ones.
std::vector<MetricsReport> partial_sequence_reconstruction(const Sequences& data, const std::vector<double>& fractions,
                                                           int trials, int folds, const EmOptions& fit,
                                                           std::uint64_t seed, bool score_full = false);

/// Mean and std over n_samples model draws of the distance to the nearest training sequence.
MetricsReport specificity(const LdsParams& params, const Sequences& train, int n_samples, std::uint64_t seed);

}  // namespace stpsm
