#include "stpsm/core/ensemble.hpp"

#include "stpsm/core/errors.hpp"

namespace stpsm {

EnsembleMatrix make_ensemble(const Eigen::MatrixXd& flattened_columns, EnsembleAxis axis) {
  EnsembleMatrix e;
  e.axis = axis;
  e.ensemble_mean = flattened_columns.rowwise().mean();
  e.Y = flattened_columns.colwise() - e.ensemble_mean;
  return e;
}

EnsembleMatrix build_ensemble(const Cohort& aligned, EnsembleAxis axis, int index) {
  const int n_count = aligned.subjects();
  const int t_count = aligned.timepoints();
  const bool inter = axis == EnsembleAxis::inter_subject;
  const int limit = inter ? t_count : n_count;
  if (index < 0 || index >= limit)
    throw IndexOutOfRange(std::string(inter ? "timepoint " : "subject ") + std::to_string(index) + " not in [0, " +
                          std::to_string(limit) + ")");
  const int members = inter ? n_count : t_count;
  const int dm = aligned.particles() * aligned.dim();
  Eigen::MatrixXd columns(dm, members);
  for (int k = 0; k < members; ++k) {
    const PointSet& ps = inter ? aligned.at(k, index) : aligned.at(index, k);
    if (ps.size() * ps.dim() != dm) throw DimensionMismatch("ensemble members differ in size");
    columns.col(k) = ps.flatten();
  }
  return make_ensemble(columns, axis);
}

}  // namespace stpsm
