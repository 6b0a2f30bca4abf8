#include "stpsm/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "stpsm/core/errors.hpp"
#include "stpsm/core/parallel.hpp"
#include "stpsm/core/seeds.hpp"
#include "stpsm/lds/inference.hpp"

namespace stpsm {

namespace {

double cell_rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == 0 ? 0.0 : std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Sequences subset(const Sequences& data, const std::vector<int>& idx) {
  Sequences out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(data[i]);
  return out;
}

std::vector<int> complement(int n, const std::vector<int>& test) {
  std::vector<bool> in_test(n, false);
  for (int i : test) in_test[i] = true;
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!in_test[i]) out.push_back(i);
  return out;
}

void check_data(const Sequences& data) {
  if (data.empty()) throw InvalidArgument("no sequences");
  for (const auto& s : data)
    if (s.rows() != data.front().rows() || s.cols() != data.front().cols())
      throw ShapeMismatch("sequences differ in shape");
}

EmOptions fold_fit(const EmOptions& fit, std::uint64_t seed, int fold) {
  EmOptions o = fit;
  o.init_seed = derive_seed(derive_seed(seed, "fit"), static_cast<std::uint64_t>(fold));
  return o;
}

}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::full_generalization: return "full_generalization";
    case MetricKind::partial_reconstruction: return "partial_reconstruction";
    case MetricKind::specificity: return "specificity";
  }
  return "unknown";
}

double rmse(const Sequences& x, const Sequences& xhat) {
  if (x.size() != xhat.size()) throw ShapeMismatch("sequence counts differ");
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (x[n].rows() != xhat[n].rows() || x[n].cols() != xhat[n].cols())
      throw ShapeMismatch("sequence " + std::to_string(n) + " shapes differ");
    sum += (x[n] - xhat[n]).squaredNorm();
    count += static_cast<double>(x[n].size());
  }
  if (count == 0.0) throw ShapeMismatch("empty input");
  return std::sqrt(sum / count);
}

std::vector<std::vector<int>> fold_splits(int n_subjects, int folds, std::uint64_t seed) {
  if (folds < 2 || folds > n_subjects)
    throw InvalidArgument("need 2 <= folds <= subjects, got folds=" + std::to_string(folds) + " for " +
                          std::to_string(n_subjects) + " subjects");
  std::vector<int> order(n_subjects);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out(folds);
  for (int i = 0; i < n_subjects; ++i) out[i % folds].push_back(order[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

MetricsReport summarize(MetricKind kind, std::vector<CellError> cells, int length) {
  MetricsReport r;
  r.metric_kind = kind;
  std::vector<double> t_sum(length, 0.0), t_count(length, 0.0);
  // Keyed by (fold, trial, sequence): one unit per scored sequence instance.
  std::map<std::tuple<int, int, int>, std::pair<double, double>> units;
  double total = 0.0;
  for (const CellError& c : cells) {
    if (c.t < 0 || c.t >= length) throw IndexOutOfRange("cell time index out of range");
    const double sq = c.value * c.value;
    t_sum[c.t] += sq;
    t_count[c.t] += 1.0;
    total += sq;
    auto& u = units[{c.fold, c.trial, c.sequence}];
    u.first += sq;
    u.second += 1.0;
  }
  r.per_timepoint_rmse.resize(length);
  for (int t = 0; t < length; ++t)
    r.per_timepoint_rmse[t] = t_count[t] > 0 ? std::sqrt(t_sum[t] / t_count[t]) : std::numeric_limits<double>::quiet_NaN();
  for (const auto& [key, u] : units) r.per_sequence_rmse.push_back(std::sqrt(u.first / u.second));
  if (!cells.empty()) {
    if (kind == MetricKind::specificity)
      r.overall_rmse = std::accumulate(r.per_sequence_rmse.begin(), r.per_sequence_rmse.end(), 0.0) /
                       static_cast<double>(r.per_sequence_rmse.size());
    else
      r.overall_rmse = std::sqrt(total / static_cast<double>(cells.size()));
    r.overall_std = sample_std(r.per_sequence_rmse);
  }
  r.cells = std::move(cells);
  return r;
}

std::vector<MetricsReport> full_sequence_generalization(const Sequences& data, int folds, const EmOptions& fit,
                                                        std::uint64_t seed) {
  check_data(data);
  const int n_count = static_cast<int>(data.size()), t_count = static_cast<int>(data.front().cols());
  const auto splits = fold_splits(n_count, folds, derive_seed(seed, "folds"));
  std::vector<std::vector<CellError>> fold_cells(folds);
  for (int f = 0; f < folds; ++f) {
    const Sequences train = subset(data, complement(n_count, splits[f]));
    const Sequences test = subset(data, splits[f]);
    const EmResult model = em_fit(train, fold_fit(fit, seed, f));
    const Sequences rec = reconstruct(model.params, test);
    for (std::size_t i = 0; i < test.size(); ++i)
      for (int t = 0; t < t_count; ++t)
        fold_cells[f].push_back({f, 0, splits[f][i], t, cell_rmse(test[i].col(t), rec[i].col(t))});
  }
  std::vector<MetricsReport> out;
  std::vector<CellError> all;
  for (int f = 0; f < folds; ++f) {
    all.insert(all.end(), fold_cells[f].begin(), fold_cells[f].end());
    out.push_back(summarize(MetricKind::full_generalization, std::move(fold_cells[f]), t_count));
    out.back().fold_id = f;
  }
  out.push_back(summarize(MetricKind::full_generalization, std::move(all), t_count));
  return out;
}

std::vector<MetricsReport> partial_sequence_reconstruction(const Sequences& data, const std::vector<double>& fractions,
                                                           int trials, int folds, const EmOptions& fit,
                                                           std::uint64_t seed, bool score_full) {
  check_data(data);
  for (double f : fractions)
    if (!(f > 0.0 && f < 1.0)) throw InvalidFraction("mask fraction " + std::to_string(f) + " is outside (0, 1)");
  if (trials < 1) throw InvalidArgument("need at least one trial");
  const int n_count = static_cast<int>(data.size()), t_count = static_cast<int>(data.front().cols());
  const auto splits = fold_splits(n_count, folds, derive_seed(seed, "folds"));
  std::vector<std::vector<CellError>> per_fraction(fractions.size());
  for (int f = 0; f < folds; ++f) {
    const Sequences train = subset(data, complement(n_count, splits[f]));
    const Sequences test = subset(data, splits[f]);
    const EmResult model = em_fit(train, fold_fit(fit, seed, f));
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      const int hidden = std::min(static_cast<int>(std::floor(fractions[fi] * t_count)), t_count - 1);
      if (hidden <= 0) continue;
      for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(derive_seed(derive_seed(derive_seed(seed, "mask"), fi * 1000003ULL + f),
                                        static_cast<std::uint64_t>(trial)));
        ObservationMask mask = ObservationMask::all_observed(static_cast<int>(test.size()), t_count);
        std::vector<int> frames(t_count - 1);
        std::iota(frames.begin(), frames.end(), 1);
        for (std::size_t i = 0; i < test.size(); ++i) {
          std::shuffle(frames.begin(), frames.end(), rng);
          for (int k = 0; k < hidden; ++k) mask.observed(i, frames[k]) = false;
        }
        const Sequences rec = reconstruct(model.params, test, &mask);
        for (std::size_t i = 0; i < test.size(); ++i)
          for (int t = 0; t < t_count; ++t)
            if (score_full || !mask.observed(i, t))
              per_fraction[fi].push_back({f, trial, splits[f][i], t, cell_rmse(test[i].col(t), rec[i].col(t))});
      }
    }
  }
  std::vector<MetricsReport> out;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    out.push_back(summarize(MetricKind::partial_reconstruction, std::move(per_fraction[fi]), t_count));
    out.back().mask_fraction = fractions[fi];
  }
  return out;
}

MetricsReport specificity(const LdsParams& params, const Sequences& train, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("specificity needs at least one sample");
  check_data(train);
  const Sequences samples = sample(params, n_samples, seed);
  const int t_count = params.length();
  std::vector<std::vector<CellError>> per_sample(n_samples);
  parallel_for(n_samples, [&](int s) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].rows() != samples[s].rows() || train[i].cols() != samples[s].cols())
        throw ShapeMismatch("training sequences do not match the model");
      const double d = (train[i] - samples[s]).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = static_cast<int>(i);
      }
    }
    for (int t = 0; t < t_count; ++t)
      per_sample[s].push_back({0, 0, s, t, cell_rmse(samples[s].col(t), train[best].col(t))});
  });
  std::vector<CellError> cells;
  for (auto& v : per_sample) cells.insert(cells.end(), v.begin(), v.end());
  MetricsReport r = summarize(MetricKind::specificity, std::move(cells), t_count);
  r.n_samples = n_samples;
  return r;
}

}  // namespace stpsm
