#include "stpsm/eval/modes.hpp"

#include <cmath>

#include "stpsm/core/errors.hpp"

namespace stpsm {

PcaModes modes_of_variation(const Cohort& pdm, int k) {
  pdm.validate();
  if (k < 1) throw InvalidArgument("need at least one mode");
  const int shapes = pdm.subjects() * pdm.timepoints();
  if (shapes < 2) throw DegenerateEnsemble("PCA needs at least two shapes");
  const Eigen::Index d = static_cast<Eigen::Index>(pdm.particles()) * pdm.dim();
  Eigen::MatrixXd X(d, shapes);
  for (int n = 0; n < pdm.subjects(); ++n)
    for (int t = 0; t < pdm.timepoints(); ++t) X.col(n * pdm.timepoints() + t) = pdm.at(n, t).flatten();

  PcaModes out;
  out.mean_shape = X.rowwise().mean();
  X.colwise() -= out.mean_shape;
  out.total_variance = X.squaredNorm() / (shapes - 1);
  // Centering identical shapes leaves only rounding residue.
  const double residue = 1e-24 * out.mean_shape.squaredNorm() * shapes / static_cast<double>(shapes - 1);
  if (!(out.total_variance > residue)) throw DegenerateEnsemble("every shape is identical");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
  const Eigen::Index keep = std::min<Eigen::Index>({k, shapes - 1, d, svd.singularValues().size()});
  out.eigenvalues = svd.singularValues().head(keep).cwiseAbs2() / (shapes - 1);
  out.modes = svd.matrixU().leftCols(keep);
  for (Eigen::Index j = 0; j < keep; ++j) {
    Eigen::Index arg = 0;
    out.modes.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.modes(arg, j) < 0) out.modes.col(j) *= -1.0;
    std::vector<Eigen::VectorXd> sweep;
    for (int step = -2; step <= 2; ++step)
      sweep.push_back(out.mean_shape + step * std::sqrt(out.eigenvalues(j)) * out.modes.col(j));
    out.sweep.push_back(std::move(sweep));
  }
  return out;
}

}  // namespace stpsm
