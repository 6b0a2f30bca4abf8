#include "stpsm/psm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "stpsm/core/errors.hpp"
#include "stpsm/surfaces/projection.hpp"

namespace stpsm {

std::vector<int> nearest_neighbors(const Eigen::MatrixXd& points, int index, int k) {
  const int m_count = static_cast<int>(points.rows());
  k = std::min(k, m_count - 1);
  if (k <= 0) return {};
  std::vector<std::pair<double, int>> candidates;
  candidates.reserve(m_count - 1);
  for (int j = 0; j < m_count; ++j) {
    if (j == index) continue;
    candidates.emplace_back((points.row(j) - points.row(index)).squaredNorm(), j);
  }
  std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end());
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) out[i] = candidates[i].second;
  return out;
}

double adaptive_sigma(const Eigen::MatrixXd& points, int index, const std::vector<int>& neighbors,
                      const SamplingKernel& kernel) {
  if (neighbors.empty()) return kernel.sigma_min;
  const int rank = static_cast<int>((neighbors.size() + 1) / 2);
  const double d = (points.row(neighbors[rank - 1]) - points.row(index)).norm();
  return std::clamp(d, kernel.sigma_min, kernel.sigma_max);
}

namespace {

struct KernelTerms {
  std::vector<int> neighbors;
  std::vector<double> exponents;
  double sigma = 0.0;
  double max_exponent = 0.0;
};

// fixed_sigma <= 0 selects the adaptive bandwidth.
KernelTerms kernel_terms(const Eigen::MatrixXd& points, int index, const SamplingKernel& kernel, double fixed_sigma) {
  KernelTerms terms;
  terms.neighbors = nearest_neighbors(points, index, kernel.neighbors);
  terms.sigma = fixed_sigma > 0.0 ? fixed_sigma : adaptive_sigma(points, index, terms.neighbors, kernel);
  const double inv = 1.0 / (2.0 * terms.sigma * terms.sigma);
  terms.max_exponent = -std::numeric_limits<double>::infinity();
  for (int j : terms.neighbors) {
    const double e = -(points.row(j) - points.row(index)).squaredNorm() * inv;
    terms.exponents.push_back(e);
    terms.max_exponent = std::max(terms.max_exponent, e);
  }
  return terms;
}

void require_spread(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw InvalidArgument("sampling gradient needs at least two particles");
  const Eigen::RowVectorXd first = points.row(0);
  for (Eigen::Index m = 1; m < points.rows(); ++m)
    if ((points.row(m) - first).squaredNorm() > 0.0) return;
  throw DegenerateConfiguration("all particles coincide");
}

}  // namespace

Eigen::VectorXd adaptive_bandwidths(const Eigen::MatrixXd& points, const SamplingKernel& kernel) {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int idx = static_cast<int>(i);
    out(i) = adaptive_sigma(points, idx, nearest_neighbors(points, idx, kernel.neighbors), kernel);
  }
  return out;
}

Eigen::VectorXd sampling_update(const Eigen::MatrixXd& points, int index, const SamplingKernel& kernel) {
  return sampling_update(points, index, kernel, 0.0);
}

Eigen::VectorXd sampling_update(const Eigen::MatrixXd& points, int index, const SamplingKernel& kernel, double sigma) {
  Eigen::VectorXd update = Eigen::VectorXd::Zero(points.cols());
  if (points.rows() < 2) return update;
  const KernelTerms terms = kernel_terms(points, index, kernel, sigma);
  double weight_sum = 0.0;
  for (std::size_t a = 0; a < terms.neighbors.size(); ++a) {
    const double w = std::exp(terms.exponents[a] - terms.max_exponent);
    weight_sum += w;
    update += w * (points.row(index) - points.row(terms.neighbors[a])).transpose();
  }
  update /= weight_sum;
  const double len = update.norm();
  if (len > terms.sigma) update *= terms.sigma / len;
  return update;
}

Eigen::MatrixXd sampling_gradient(const PointSet& shape, const OptimizerConfig& config) {
  require_spread(shape.points);
  Eigen::MatrixXd out(shape.points.rows(), shape.points.cols());
  for (int m = 0; m < shape.size(); ++m) out.row(m) = sampling_update(shape.points, m, config.sampling_kernel).transpose();
  return out;
}

Eigen::MatrixXd sampling_gradient(const PointSet& shape, const OptimizerConfig& config, const ShapeDomain& domain) {
  if (shape.dim() != 3) throw DimensionMismatch("surface domains are 3-D");
  Eigen::MatrixXd out = sampling_gradient(shape, config);
  for (int m = 0; m < shape.size(); ++m) {
    const Eigen::Vector3d n = surface_normal(domain, shape.points.row(m).transpose());
    const Eigen::Vector3d u = out.row(m).transpose();
    out.row(m) = (u - n * n.dot(u)).transpose();
  }
  return out;
}

double sampling_entropy(const Eigen::MatrixXd& points, const SamplingKernel& kernel) {
  return sampling_entropy(points, kernel, Eigen::VectorXd());
}

double sampling_entropy(const Eigen::MatrixXd& points, const SamplingKernel& kernel, const Eigen::VectorXd& sigmas) {
  const int m_count = static_cast<int>(points.rows());
  if (m_count < 2) return 0.0;
  if (sigmas.size() != 0 && sigmas.size() != m_count) throw DimensionMismatch("one bandwidth per particle required");
  double total = 0.0;
  for (int i = 0; i < m_count; ++i) {
    const KernelTerms terms = kernel_terms(points, i, kernel, sigmas.size() ? sigmas(i) : 0.0);
    double sum = 0.0;
    for (double e : terms.exponents) sum += std::exp(e - terms.max_exponent);
    const double log_density = terms.max_exponent + std::log(sum) - std::log(static_cast<double>(terms.neighbors.size())) -
                               0.5 * kernel.intrinsic_dim * std::log(2.0 * std::numbers::pi * terms.sigma * terms.sigma);
    total -= log_density;
  }
  return total / m_count;
}

}  // namespace stpsm
