#include "stpsm/core/point_set.hpp"

#include "stpsm/core/errors.hpp"

namespace stpsm {

Eigen::VectorXd PointSet::flatten() const {
  Eigen::VectorXd flat(points.size());
  const int d = dim();
  for (int m = 0; m < size(); ++m) flat.segment(m * d, d) = points.row(m).transpose();
  return flat;
}

PointSet PointSet::unflatten(const Eigen::VectorXd& flat, int dim, int domain) {
  if (dim <= 0 || flat.size() % dim != 0)
    throw DimensionMismatch("flattened length " + std::to_string(flat.size()) + " is not a multiple of " +
                            std::to_string(dim));
  const int m_count = static_cast<int>(flat.size() / dim);
  Eigen::MatrixXd pts(m_count, dim);
  for (int m = 0; m < m_count; ++m) pts.row(m) = flat.segment(m * dim, dim).transpose();
  return PointSet(std::move(pts), domain);
}

Cohort::Cohort(int n_subjects, int n_timepoints) : shapes(n_subjects, n_timepoints) {
  subject_ids.reserve(n_subjects);
  for (int n = 0; n < n_subjects; ++n) subject_ids.push_back("subject" + std::to_string(n + 1));
  time_labels.reserve(n_timepoints);
  for (int t = 0; t < n_timepoints; ++t) time_labels.push_back("time" + std::to_string(t + 1));
}

int Cohort::particles() const { return shapes.empty() ? 0 : shapes.cells().front().size(); }

int Cohort::dim() const { return shapes.empty() ? 0 : shapes.cells().front().dim(); }

void Cohort::validate() const {
  if (shapes.empty()) throw DimensionMismatch("cohort is empty");
  const int m_count = particles();
  const int d = dim();
  if (m_count < 1 || d < 1) throw DimensionMismatch("cohort point sets are empty");
  for (int n = 0; n < subjects(); ++n) {
    for (int t = 0; t < timepoints(); ++t) {
      const PointSet& ps = shapes(n, t);
      if (ps.size() != m_count || ps.dim() != d)
        throw DimensionMismatch("cell (" + std::to_string(n) + ", " + std::to_string(t) + ") has " +
                                std::to_string(ps.size()) + "x" + std::to_string(ps.dim()) + " points, expected " +
                                std::to_string(m_count) + "x" + std::to_string(d));
      if (!ps.all_finite())
        throw DimensionMismatch("cell (" + std::to_string(n) + ", " + std::to_string(t) + ") has non-finite points");
    }
  }
  if (static_cast<int>(subject_ids.size()) != subjects() || static_cast<int>(time_labels.size()) != timepoints())
    throw DimensionMismatch("label counts do not match the grid");
}

std::vector<Eigen::MatrixXd> to_sequences(const Cohort& cohort) {
  cohort.validate();
  const int dm = cohort.particles() * cohort.dim();
  std::vector<Eigen::MatrixXd> sequences;
  sequences.reserve(cohort.subjects());
  for (int n = 0; n < cohort.subjects(); ++n) {
    Eigen::MatrixXd seq(dm, cohort.timepoints());
    for (int t = 0; t < cohort.timepoints(); ++t) seq.col(t) = cohort.at(n, t).flatten();
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

Cohort from_sequences(const std::vector<Eigen::MatrixXd>& sequences, int dim) {
  if (sequences.empty()) throw DimensionMismatch("no sequences");
  const int n_count = static_cast<int>(sequences.size());
  const int t_count = static_cast<int>(sequences.front().cols());
  Cohort cohort(n_count, t_count);
  for (int n = 0; n < n_count; ++n) {
    if (sequences[n].cols() != t_count || sequences[n].rows() != sequences.front().rows())
      throw DimensionMismatch("ragged sequence set");
    for (int t = 0; t < t_count; ++t)
      cohort.at(n, t) = PointSet::unflatten(sequences[n].col(t), dim, n * t_count + t);
  }
  return cohort;
}

}  // namespace stpsm
