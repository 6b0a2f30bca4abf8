#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "../support/generators.hpp"
#include "stpsm/core/errors.hpp"
#include "stpsm/eval/metrics.hpp"
#include "stpsm/eval/modes.hpp"
#include "stpsm/eval/report_io.hpp"
#include "stpsm/lds/inference.hpp"
#include "stpsm/surfaces/synthetic.hpp"

using namespace stpsm;

namespace {

LdsParams random_system(testgen::Rng& rng, int L, int D, int T, double noise) {
  LdsParams p = LdsParams::zeros(L, D, T);
  const Eigen::MatrixXd w = rng.matrix(D, L);
  for (int t = 0; t < T; ++t) {
    p.A[t] = t == 0 ? Eigen::MatrixXd::Identity(L, L) : Eigen::MatrixXd(0.95 * rng.orthogonal(L));
    p.W[t] = w;
  }
  p.state_cov = 0.05 * Eigen::MatrixXd::Identity(L, L);
  p.obs_var = Eigen::VectorXd::Constant(D, noise);
  p.prior_mean = rng.vector(L);
  p.prior_cov = Eigen::MatrixXd::Identity(L, L);
  return p;
}

EmOptions quick_fit(int L, int iterations) {
  EmOptions o;
  o.latent_dim = L;
  o.iterations = iterations;
  return o;
}

double pooled_from_timepoints(const MetricsReport& r) {
  std::map<int, double> count;
  for (const auto& c : r.cells) count[c.t] += 1.0;
  double num = 0, den = 0;
  for (const auto& [t, k] : count) {
    num += k * r.per_timepoint_rmse[t] * r.per_timepoint_rmse[t];
    den += k;
  }
  return std::sqrt(num / den);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("rmse on hand-built inputs is exact") {
  const Sequences x{(Eigen::MatrixXd(1, 2) << 1.0, 2.0).finished(), (Eigen::MatrixXd(1, 2) << 3.0, 4.0).finished()};
  CHECK(rmse(x, x) == 0.0);
  Sequences y = x;
  y[1](0, 1) = 6.0;
  CHECK(rmse(x, y) == 1.0);
  y = x;
  y[0](0, 0) = 4.0;
  y[0](0, 1) = 6.0;
  CHECK(rmse(x, y) == 2.5);
  CHECK_THROWS_AS(rmse(x, Sequences{x[0]}), ShapeMismatch);
  CHECK_THROWS_AS(rmse(x, Sequences{x[0], Eigen::MatrixXd::Zero(2, 2)}), ShapeMismatch);
}

TEST_CASE("rmse agrees with a two-pass recomputation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    testgen::Rng rng(seed);
    const int n = rng.integer(1, 5), d = rng.integer(1, 7), t = rng.integer(1, 6);
    Sequences a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(rng.matrix(d, t));
      b.push_back(rng.matrix(d, t));
    }
    std::vector<double> sq;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < t; ++c)
        for (int r = 0; r < d; ++r) sq.push_back((a[i](r, c) - b[i](r, c)) * (a[i](r, c) - b[i](r, c)));
    double mean = 0.0;
    for (double v : sq) mean += v / sq.size();
    CHECK(std::abs(rmse(a, b) - std::sqrt(mean)) < 1e-12);
  }
}

TEST_CASE("fold splits partition the subjects") {
  for (int folds : {2, 3, 5, 7}) {
    const auto splits = fold_splits(7, folds, 11);
    REQUIRE(static_cast<int>(splits.size()) == folds);
    std::multiset<int> seen;
    for (const auto& f : splits) {
      CHECK(!f.empty());
      CHECK(std::is_sorted(f.begin(), f.end()));
      seen.insert(f.begin(), f.end());
    }
    CHECK(seen.size() == 7);
    for (int i = 0; i < 7; ++i) CHECK(seen.count(i) == 1);
    CHECK(fold_splits(7, folds, 11) == splits);
  }
  for (const auto& f : fold_splits(6, 6, 3)) CHECK(f.size() == 1);
  CHECK(fold_splits(20, 5, 1) != fold_splits(20, 5, 2));
  CHECK_THROWS_AS(fold_splits(4, 5, 0), InvalidArgument);
  CHECK_THROWS_AS(fold_splits(4, 1, 0), InvalidArgument);
}

TEST_CASE("summaries pool per-timepoint errors consistently") {
  testgen::Rng rng(3);
  std::vector<CellError> cells;
  for (int s = 0; s < 6; ++s)
    for (int t = 0; t < 5; ++t)
      if (rng.uniform() < 0.7) cells.push_back({s % 2, 0, s, t, rng.uniform(0, 2)});
  const MetricsReport r = summarize(MetricKind::partial_reconstruction, cells, 5);
  REQUIRE(r.overall_rmse.has_value());
  CHECK(std::abs(*r.overall_rmse - pooled_from_timepoints(r)) < 1e-12);
  CHECK(*r.overall_rmse >= 0.0);
  CHECK_FALSE(summarize(MetricKind::partial_reconstruction, {}, 5).overall_rmse.has_value());
  CHECK(std::isnan(summarize(MetricKind::partial_reconstruction, {}, 5).per_timepoint_rmse[0]));
  CHECK_THROWS_AS(summarize(MetricKind::full_generalization, {{0, 0, 0, 9, 1.0}}, 5), IndexOutOfRange);
}

TEST_CASE("full-sequence generalization") {
  SUBCASE("identical sequences are reconstructed almost exactly") {
    testgen::Rng rng(4);
    const Eigen::MatrixXd seq = rng.matrix(6, 5);
    const Sequences data(5, seq);
    const auto reports = full_sequence_generalization(data, 5, quick_fit(2, 50), 1);
    REQUIRE(reports.size() == 6);
    CHECK(reports.back().fold_id == -1);
    CHECK(*reports.back().overall_rmse < 1e-3);
  }
  SUBCASE("reports pool, partition and repeat") {
    testgen::Rng rng(5);
    const Sequences data = sample(random_system(rng, 2, 6, 6, 0.01), 10, 3);
    const auto a = full_sequence_generalization(data, 5, quick_fit(2, 10), 7);
    const auto b = full_sequence_generalization(data, 5, quick_fit(2, 10), 7);
    std::set<int> tested;
    for (int f = 0; f < 5; ++f) {
      CHECK(a[f].fold_id == f);
      for (const auto& c : a[f].cells) tested.insert(c.sequence);
      CHECK(*a[f].overall_rmse == *b[f].overall_rmse);
    }
    CHECK(tested.size() == 10);
    const MetricsReport& pooled = a.back();
    CHECK(pooled.cells.size() == 60);
    CHECK(std::abs(*pooled.overall_rmse - pooled_from_timepoints(pooled)) < 1e-12);
    CHECK(pooled.per_sequence_rmse.size() == 10);
  }
}

TEST_CASE("partial-sequence reconstruction") {
  testgen::Rng rng(6);
  SUBCASE("no hidden frame gives an absent value") {
    const Sequences data = sample(random_system(rng, 2, 4, 5, 0.01), 6, 1);
    const auto r = partial_sequence_reconstruction(data, {0.1}, 2, 3, quick_fit(2, 5), 1);
    REQUIRE(r.size() == 1);
    CHECK_FALSE(r[0].overall_rmse.has_value());
    CHECK(r[0].cells.empty());
    CHECK(*r[0].mask_fraction == 0.1);
  }
  SUBCASE("static sequences are recovered from their observed frames") {
    Sequences data;
    for (int n = 0; n < 8; ++n) {
      const Eigen::VectorXd c = rng.vector(4);
      data.push_back(c.replicate(1, 6));
    }
    const auto r = partial_sequence_reconstruction(data, {0.5}, 3, 4, quick_fit(4, 50), 2);
    REQUIRE(r[0].overall_rmse.has_value());
    MESSAGE("static masked RMSE " << *r[0].overall_rmse);
    CHECK(*r[0].overall_rmse < 1e-6);
  }
  SUBCASE("hiding more frames does not help") {
    const Sequences data = sample(random_system(rng, 2, 6, 10, 0.05), 12, 2);
    const auto r = partial_sequence_reconstruction(data, {0.1, 0.5}, 20, 3, quick_fit(2, 20), 3);
    REQUIRE(r.size() == 2);
    CHECK(r[0].cells.size() == 12 * 20 * 1);
    CHECK(r[1].cells.size() == 12 * 20 * 5);
    for (const auto& c : r[1].cells) CHECK(c.t > 0);
    CHECK(*r[1].overall_rmse >= *r[0].overall_rmse);
    const auto full = partial_sequence_reconstruction(data, {0.5}, 2, 3, quick_fit(2, 5), 3, true);
    CHECK(full[0].cells.size() == 12 * 2 * 10);
  }
  SUBCASE("fractions must lie strictly inside (0, 1)") {
    const Sequences data = sample(random_system(rng, 1, 2, 4, 0.01), 4, 1);
    for (double f : {0.0, 1.0, 1.5, -0.1})
      CHECK_THROWS_AS(partial_sequence_reconstruction(data, {f}, 1, 2, quick_fit(1, 2), 1), InvalidFraction);
  }
}

TEST_CASE("specificity") {
  SUBCASE("a deterministic model reproducing a training sequence scores zero") {
    LdsParams p = LdsParams::zeros(1, 2, 3);
    for (int t = 0; t < 3; ++t) {
      p.A[t] = Eigen::MatrixXd::Constant(1, 1, t == 0 ? 1.0 : 0.5);
      p.W[t] = Eigen::Vector2d(1.0, -2.0);
    }
    p.prior_mean = Eigen::VectorXd::Constant(1, 4.0);
    const Sequences rollout = sample(p, 1, 0);
    const Sequences train{rollout[0] + Eigen::MatrixXd::Ones(2, 3), rollout[0]};
    const MetricsReport r = specificity(p, train, 5, 1);
    CHECK(*r.overall_rmse == 0.0);
    CHECK(r.n_samples == 5);
  }
  SUBCASE("one sample traced by hand") {
    testgen::Rng rng(7);
    const LdsParams p = random_system(rng, 2, 3, 4, 0.1);
    const Sequences train = sample(p, 6, 99);
    const MetricsReport r = specificity(p, train, 1, 42);
    const Eigen::MatrixXd s = sample(p, 1, 42)[0];
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tr : train) best = std::min(best, std::sqrt((tr - s).squaredNorm() / s.size()));
    CHECK(std::abs(*r.overall_rmse - best) < 1e-12);
    CHECK(r.overall_std == 0.0);
  }
  SUBCASE("values are non-negative and reproducible") {
    testgen::Rng rng(8);
    const LdsParams p = random_system(rng, 2, 3, 4, 0.1);
    const Sequences train = sample(p, 6, 1);
    const MetricsReport a = specificity(p, train, 30, 5), b = specificity(p, train, 30, 5);
    CHECK(*a.overall_rmse > 0.0);
    CHECK(*a.overall_rmse == *b.overall_rmse);
    for (const auto& c : a.cells) CHECK(c.value >= 0.0);
    CHECK(a.per_sequence_rmse.size() == 30);
  }
}

TEST_CASE("modes of two shapes") {
  Cohort c(2, 1);
  Eigen::MatrixXd a(2, 3), b(2, 3);
  a << 0, 0, 0, 1, 0, 0;
  b << 0, 1, 0, 1, 1, 2;
  c.at(0, 0) = PointSet(a);
  c.at(1, 0) = PointSet(b);
  const PcaModes m = modes_of_variation(c, 3);
  REQUIRE(m.modes.cols() == 1);
  const Eigen::VectorXd flat_diff = PointSet(b - a).flatten();
  CHECK(std::abs(m.modes.col(0).dot(flat_diff.normalized())) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.eigenvalues(0) == doctest::Approx(flat_diff.squaredNorm() / 2.0));
  REQUIRE(m.sweep.size() == 1);
  CHECK(m.sweep[0].size() == 5);
  CHECK((m.sweep[0][2] - m.mean_shape).norm() == 0.0);

  Cohort same(2, 1);
  same.at(0, 0) = PointSet(a);
  same.at(1, 0) = PointSet(a);
  CHECK_THROWS_AS(modes_of_variation(same, 2), DegenerateEnsemble);
}

TEST_CASE("leading mode follows a single-axis modulation") {
  SynthSpec spec;
  spec.n_subjects = 3;
  spec.n_timepoints = 8;
  spec.radii_stdev.setZero();
  spec.amplitude = Eigen::Vector3d(0.2, 0.0, 0.0);
  spec.truth_points = 32;
  const SynthCohort synth = generate_synthetic_cohort(spec);
  const PcaModes m = modes_of_variation(synth.truth, 3);
  Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(32, 3);
  dir.col(0) = synth.unit_directions.col(0);
  const Eigen::VectorXd analytic = PointSet(dir).flatten().normalized();
  CHECK(std::abs(m.modes.col(0).dot(analytic)) > 0.99);
}

TEST_CASE("mode eigenvalues account for the total variance") {
  testgen::Rng rng(9);
  Cohort c(4, 3);
  for (auto& cell : c.shapes) cell = PointSet(rng.matrix(5, 3));
  const PcaModes m = modes_of_variation(c, 100);
  CHECK(m.modes.cols() == 11);
  CHECK(std::abs(m.eigenvalues.sum() - m.total_variance) < 1e-9);
  CHECK((m.modes.transpose() * m.modes - Eigen::MatrixXd::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-10);
  for (int k = 1; k < 11; ++k) CHECK(m.eigenvalues(k) <= m.eigenvalues(k - 1));
  for (int k = 0; k < 11; ++k) {
    Eigen::Index i;
    m.modes.col(k).cwiseAbs().maxCoeff(&i);
    CHECK(m.modes(i, k) > 0.0);
  }
}

TEST_CASE("metrics CSV cells recompute the summary") {
  testgen::Rng rng(10);
  const Sequences data = sample(random_system(rng, 2, 4, 5, 0.02), 8, 4);
  ApproachSummary row;
  row.approach = "demo";
  row.full = full_sequence_generalization(data, 4, quick_fit(2, 5), 1);
  row.partial = partial_sequence_reconstruction(data, {0.25, 0.5}, 3, 4, quick_fit(2, 5), 1);
  row.specificity = specificity(em_fit(data, quick_fit(2, 5)).params, data, 10, 2);
  const auto dir = std::filesystem::temp_directory_path() / "stpsm_test_eval";
  std::filesystem::create_directories(dir);
  write_metrics_csv(dir / "metrics.csv", {row});
  write_summary_json(dir / "summary.json", {row});

  std::ifstream in(dir / "metrics.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "approach,metric,fraction,fold,trial,sequence,t,value");
  std::map<std::string, std::pair<double, double>> pooled;
  std::map<std::string, std::map<int, std::pair<double, double>>> per_sample;
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    REQUIRE(f.size() == 8);
    CHECK(f[0] == "demo");
    const std::string key = f[1] + "|" + f[2];
    const double v = std::stod(f[7]);
    pooled[key].first += v * v;
    pooled[key].second += 1;
    per_sample[key][std::stoi(f[5])].first += v * v;
    per_sample[key][std::stoi(f[5])].second += 1;
  }
  std::ifstream js(dir / "summary.json");
  const nlohmann::json j = nlohmann::json::parse(js);
  const nlohmann::json& r = j.at("rows").at(0);
  auto recomputed = [&](const std::string& key) { return std::sqrt(pooled[key].first / pooled[key].second); };
  CHECK(std::abs(recomputed("full_generalization|") - r.at("full_sequence").at("rmse").get<double>()) < 1e-12);
  CHECK(std::abs(recomputed("partial_reconstruction|0.25") - *row.partial[0].overall_rmse) < 1e-12);
  CHECK(std::abs(recomputed("partial_reconstruction|0.5") - *row.partial[1].overall_rmse) < 1e-12);
  double spec = 0.0;
  for (const auto& [s, acc] : per_sample["specificity|"]) spec += std::sqrt(acc.first / acc.second) / 10;
  CHECK(std::abs(spec - *row.specificity->overall_rmse) < 1e-12);
  std::filesystem::remove_all(dir);
}
