#include "stpsm/psm/entropy.hpp"

#include <cmath>

#include "stpsm/core/errors.hpp"

namespace stpsm {

Eigen::VectorXd ensemble_spectrum(const Eigen::MatrixXd& Y) {
  const Eigen::Index k = Y.cols();
  if (k <= 1) return Eigen::VectorXd(0);
  const Eigen::MatrixXd gram = Y.transpose() * Y;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  // Ascending order; the smallest belongs to the all-ones direction removed by centering.
  Eigen::VectorXd leading = eig.eigenvalues().tail(k - 1).reverse();
  return leading.cwiseMax(0.0);
}

double shape_entropy(const Eigen::MatrixXd& Y, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("entropy regularization must be positive");
  const Eigen::VectorXd lambda = ensemble_spectrum(Y);
  double h = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) h += std::log(lambda(i) + alpha);
  return 0.5 * h;
}

double shape_entropy(const EnsembleMatrix& ensemble, double alpha) { return shape_entropy(ensemble.Y, alpha); }

Eigen::MatrixXd correspondence_gradient(const Eigen::MatrixXd& Y, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("entropy regularization must be positive");
  Eigen::MatrixXd gram = Y.transpose() * Y;
  gram.diagonal().array() += alpha;
  return gram.llt().solve(Y.transpose()).transpose();
}

Eigen::MatrixXd correspondence_gradient(const EnsembleMatrix& ensemble, double alpha) {
  return correspondence_gradient(ensemble.Y, alpha);
}

}  // namespace stpsm
