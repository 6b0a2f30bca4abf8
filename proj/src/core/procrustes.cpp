#include "stpsm/core/procrustes.hpp"

#include <cmath>

#include "stpsm/core/errors.hpp"
#include "stpsm/core/parallel.hpp"

namespace stpsm {

Eigen::MatrixXd optimal_rotation(const Eigen::MatrixXd& source_centered, const Eigen::MatrixXd& target_centered) {
  if (source_centered.rows() != target_centered.rows() || source_centered.cols() != target_centered.cols())
    throw DimensionMismatch("source and target point sets differ in shape");
  const int d = static_cast<int>(source_centered.cols());
  const Eigen::MatrixXd cross = source_centered.transpose() * target_centered;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd& u = svd.matrixU();
  const Eigen::MatrixXd& v = svd.matrixV();
  Eigen::VectorXd signs = Eigen::VectorXd::Ones(d);
  // Flip the weakest singular direction when the unconstrained optimum is a reflection.
  if ((v * u.transpose()).determinant() < 0.0) signs(d - 1) = -1.0;
  return v * signs.asDiagonal() * u.transpose();
}

namespace {

Eigen::MatrixXd average(const std::vector<Eigen::MatrixXd>& shapes) {
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(shapes.front().rows(), shapes.front().cols());
  for (const auto& s : shapes) mean += s;
  return mean / static_cast<double>(shapes.size());
}

}  // namespace

ProcrustesResult procrustes_align(const Cohort& cohort, const ProcrustesOptions& options) {
  cohort.validate();
  if (options.max_iters < 1) throw InvalidArgument("procrustes max_iters must be >= 1");
  const int n_count = cohort.subjects();
  const int t_count = cohort.timepoints();
  const int cells = n_count * t_count;
  const int d = cohort.dim();

  std::vector<Eigen::MatrixXd> centered(cells);
  std::vector<Eigen::VectorXd> centroids(cells);
  for (int i = 0; i < cells; ++i) {
    const Eigen::MatrixXd& pts = cohort.shapes.cells()[i].points;
    centroids[i] = pts.colwise().mean().transpose();
    centered[i] = pts.rowwise() - centroids[i].transpose();
    const double spread = centered[i].norm();
    if (!(spread > 1e-12 * (1.0 + centroids[i].norm())))
      throw DegenerateShape("all points of cell " + std::to_string(i / t_count) + "," + std::to_string(i % t_count) +
                            " coincide");
  }

  double mean_norm_sum = 0.0;
  for (const auto& c : centered) mean_norm_sum += c.norm();
  Eigen::MatrixXd mean = average(centered);
  // Averaging badly misrotated inputs can cancel out; fall back to the first shape.
  if (mean.norm() < 1e-3 * mean_norm_sum / cells) mean = centered.front();
  const double reference_norm = mean.norm();

  std::vector<Eigen::MatrixXd> rotations(cells, Eigen::MatrixXd::Identity(d, d));
  std::vector<double> scales(cells, 1.0);
  std::vector<Eigen::MatrixXd> aligned(cells);

  ProcrustesResult result;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    parallel_for(cells, [&](int i) {
      rotations[i] = optimal_rotation(centered[i], mean);
      aligned[i] = centered[i] * rotations[i].transpose();
      if (options.allow_scaling) {
        scales[i] = (aligned[i].cwiseProduct(mean)).sum() / centered[i].squaredNorm();
        aligned[i] *= scales[i];
      }
    });
    Eigen::MatrixXd next_mean = average(aligned);
    if (options.allow_scaling && next_mean.norm() > 0.0) next_mean *= reference_norm / next_mean.norm();

    double objective = 0.0;
    for (const auto& a : aligned) objective += (a - next_mean).squaredNorm();
    result.objective_trace.push_back(objective);

    const double change = (next_mean - mean).norm();
    mean = std::move(next_mean);
    result.iterations = iter + 1;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.transforms = Grid2D<RigidTransform>(n_count, t_count);
  result.scales = Grid2D<double>(n_count, t_count, 1.0);
  result.aligned = cohort;
  for (int i = 0; i < cells; ++i) {
    const int n = i / t_count;
    const int t = i % t_count;
    result.transforms(n, t) = RigidTransform(rotations[i], -(rotations[i] * centroids[i]));
    result.scales(n, t) = scales[i];
    result.aligned.shapes(n, t).points = aligned[i];
  }
  result.mean_shape = std::move(mean);
  return result;
}

}  // namespace stpsm
