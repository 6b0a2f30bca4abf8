#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "../support/generators.hpp"
#include "stpsm/core/errors.hpp"
#include "stpsm/surfaces/domain_io.hpp"
#include "stpsm/surfaces/projection.hpp"
#include "stpsm/surfaces/shape_domain.hpp"
#include "stpsm/surfaces/synthetic.hpp"

using namespace stpsm;

namespace {

// Nearest point on the ellipsoid surface by dense parametric sampling plus local refinement.
double dense_surface_distance(const Ellipsoid& e, const Eigen::Vector3d& p) {
  auto point = [&](double th, double ph) {
    return Eigen::Vector3d(e.center(0) + e.radii(0) * std::sin(th) * std::cos(ph),
                           e.center(1) + e.radii(1) * std::sin(th) * std::sin(ph),
                           e.center(2) + e.radii(2) * std::cos(th));
  };
  double best = std::numeric_limits<double>::infinity(), bt = 0, bp = 0;
  const int n = 400;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j < 2 * n; ++j) {
      const double th = std::numbers::pi * i / n, ph = std::numbers::pi * j / n;
      const double d = (point(th, ph) - p).norm();
      if (d < best) best = d, bt = th, bp = ph;
    }
  double h = std::numbers::pi / n;
  for (int round = 0; round < 80; ++round, h *= 0.8)
    for (double dt : {-h, 0.0, h})
      for (double dp : {-h, 0.0, h}) {
        const double d = (point(bt + dt, bp + dp) - p).norm();
        if (d < best) best = d, bt += dt, bp += dp;
      }
  return best;
}

ShapeDomain sampled_sphere(double spacing) {
  const ShapeDomain s = ShapeDomain::sphere(Eigen::Vector3d::Zero(), 1.0);
  const Box box{Eigen::Vector3d::Constant(-2.0), Eigen::Vector3d::Constant(2.0)};
  return ShapeDomain::grid(sample_grid(s, spacing, box));
}

}  // namespace

TEST_CASE("sphere signed distance examples") {
  const ShapeDomain s = ShapeDomain::sphere(Eigen::Vector3d::Zero(), 1.0);
  const SdfSample outside = sdf_eval(s, Eigen::Vector3d(2, 0, 0));
  CHECK(outside.value == doctest::Approx(1.0));
  CHECK((outside.gradient - Eigen::Vector3d(1, 0, 0)).norm() < 1e-15);
  CHECK(sdf_eval(s, Eigen::Vector3d::Zero()).value == doctest::Approx(-1.0));
  CHECK(std::abs(sdf_eval(s, Eigen::Vector3d(0, 0, 1)).value) < 1e-15);
  CHECK(s.is_analytic());
  CHECK(s.surface_tol() == doctest::Approx(1e-4 * std::sqrt(12.0)));
}

TEST_CASE("sampled sphere grid approximates the analytic distance") {
  const ShapeDomain g = sampled_sphere(0.05);
  CHECK_FALSE(g.is_analytic());
  CHECK(std::abs(sdf_eval(g, Eigen::Vector3d(1.5, 0, 0)).value - 0.5) <= 0.01);
  testgen::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p(rng.uniform(-1.9, 1.9), rng.uniform(-1.9, 1.9), rng.uniform(-1.9, 1.9));
    const SdfSample s = sdf_eval(g, p);
    CHECK(std::abs(s.value - (p.norm() - 1.0)) <= 2 * 0.05);
    if (p.norm() > 0.3) CHECK(std::abs(s.gradient.norm() - 1.0) < 0.1);
  }
  CHECK_THROWS_AS(sdf_eval(g, Eigen::Vector3d(2.5, 0, 0)), OutOfBounds);
}

TEST_CASE("queries outside the bounding box raise OutOfBounds") {
  const ShapeDomain s = ShapeDomain::sphere(Eigen::Vector3d::Zero(), 1.0);
  CHECK_THROWS_AS(sdf_eval(s, Eigen::Vector3d(3.5, 0, 0)), OutOfBounds);
  CHECK_THROWS_AS(sdf_eval(s, Eigen::Vector3d(std::nan(""), 0, 0)), OutOfBounds);
  CHECK_THROWS_AS(ShapeDomain::sphere(Eigen::Vector3d::Zero(), 0.0), InvalidSpec);
  CHECK_THROWS_AS(ShapeDomain::ellipsoid(Eigen::Vector3d::Zero(), Eigen::Vector3d(1, -1, 1)), InvalidSpec);
}

TEST_CASE("projection examples") {
  const ShapeDomain s = ShapeDomain::sphere(Eigen::Vector3d::Zero(), 1.0);
  CHECK((project_to_surface(s, Eigen::Vector3d(2, 0, 0)) - Eigen::Vector3d(1, 0, 0)).norm() <= s.surface_tol());
  CHECK((project_to_surface(s, Eigen::Vector3d(0, 0.5, 0)) - Eigen::Vector3d(0, 1, 0)).norm() <= s.surface_tol());

  const ShapeDomain e = ShapeDomain::ellipsoid(Eigen::Vector3d::Zero(), Eigen::Vector3d(2, 1, 1), 1e-9);
  const Eigen::Vector3d q = project_to_surface(e, Eigen::Vector3d(0, 3, 0));
  CHECK((q - Eigen::Vector3d(0, 1, 0)).norm() < 1e-8);
  CHECK(sdf_eval(e, Eigen::Vector3d(0, 3, 0)).value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("ellipsoid distance matches a dense surface search") {
  testgen::Rng rng(12);
  const Ellipsoid shape{Eigen::Vector3d(0.1, -0.2, 0.3), Eigen::Vector3d(2.0, 1.0, 0.6)};
  const ShapeDomain e = ShapeDomain::ellipsoid(shape.center, shape.radii, 1e-10);
  for (int i = 0; i < 30; ++i) {
    const Eigen::Vector3d p = shape.center + rng.vector(3, 1.5);
    const double oracle = dense_surface_distance(shape, p);
    const SdfSample s = sdf_eval(e, p);
    CHECK(std::abs(std::abs(s.value) - oracle) < 1e-7);
    const Eigen::Vector3d local = (p - shape.center).cwiseQuotient(shape.radii);
    CHECK((s.value < 0) == (local.squaredNorm() < 1.0));
    const Eigen::Vector3d c = closest_point_on_ellipsoid(shape, p);
    CHECK(((c - p).norm() - oracle) < 1e-7);
    CHECK(std::abs((c - shape.center).cwiseQuotient(shape.radii).squaredNorm() - 1.0) < 1e-10);
  }
}

TEST_CASE("projection lands within tolerance and is idempotent") {
  testgen::Rng rng(13);
  const ShapeDomain domains[] = {ShapeDomain::sphere(Eigen::Vector3d(0.5, 0, 0), 1.2),
                                 ShapeDomain::ellipsoid(Eigen::Vector3d::Zero(), Eigen::Vector3d(1.5, 1.0, 0.7)),
                                 sampled_sphere(0.05)};
  for (const auto& d : domains) {
    for (int i = 0; i < 50; ++i) {
      Eigen::Vector3d p = d.centroid() + rng.vector(3, 0.8);
      if (!d.bounds().contains(p)) continue;
      const Eigen::Vector3d q = project_to_surface(d, p);
      CHECK(std::abs(sdf_eval(d, q).value) <= d.surface_tol());
      CHECK((project_to_surface(d, q) - q).norm() == 0.0);
      const Eigen::Vector3d n = surface_normal(d, q);
      CHECK(n.norm() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("synthetic cohort without modulation or noise is static") {
  SynthSpec spec;
  spec.n_subjects = 3;
  spec.n_timepoints = 4;
  spec.amplitude.setZero();
  spec.truth_points = 16;
  spec.seed = 5;
  const SynthCohort c = generate_synthetic_cohort(spec);
  for (int n = 0; n < 3; ++n)
    for (int t = 1; t < 4; ++t) {
      CHECK((c.radii(n, t) - c.radii(n, 0)).norm() == 0.0);
      CHECK((c.truth.at(n, t).points - c.truth.at(n, 0).points).norm() == 0.0);
    }
}

TEST_CASE("synthetic cohort is deterministic and follows the sinusoid") {
  SynthSpec spec;
  spec.n_subjects = 4;
  spec.n_timepoints = 6;
  spec.amplitude = Eigen::Vector3d(0.2, 0.1, 0.0);
  spec.phase = Eigen::Vector3d(0.0, 0.5, 0.0);
  spec.seed = 77;
  spec.truth_points = 32;
  const SynthCohort a = generate_synthetic_cohort(spec);
  const SynthCohort b = generate_synthetic_cohort(spec);
  for (int n = 0; n < 4; ++n)
    for (int t = 0; t < 6; ++t) {
      CHECK(a.radii(n, t) == b.radii(n, t));
      CHECK(a.truth.at(n, t).points == b.truth.at(n, t).points);
      const double angle = 2 * std::numbers::pi * t / 6;
      const Eigen::Vector3d& r0 = a.base_radii[n];
      CHECK(a.radii(n, t)(0) == doctest::Approx(r0(0) * (1 + 0.2 * std::sin(angle))).epsilon(1e-14));
      CHECK(a.radii(n, t)(1) == doctest::Approx(r0(1) * (1 + 0.1 * std::sin(angle + 0.5))).epsilon(1e-14));
      CHECK(a.radii(n, t)(2) == r0(2));
      for (int i = 0; i < a.truth.at(n, t).size(); ++i)
        CHECK(std::abs(sdf_eval(a.domains(n, t), a.truth.at(n, t).points.row(i).transpose()).value) <= 1e-9);
    }
  spec.seed = 78;
  CHECK(generate_synthetic_cohort(spec).base_radii[0] != a.base_radii[0]);
}

TEST_CASE("synthetic spec validation") {
  SynthSpec spec;
  spec.n_subjects = 0;
  CHECK_THROWS_AS(generate_synthetic_cohort(spec), InvalidSpec);
  spec = SynthSpec{};
  spec.amplitude(0) = 1.0;
  CHECK_THROWS_AS(spec.validate(), InvalidSpec);
  spec = SynthSpec{};
  spec.noise_stdev = -0.1;
  CHECK_THROWS_AS(spec.validate(), InvalidSpec);
  spec = SynthSpec{};
  spec.radii_mean(2) = 0.0;
  CHECK_THROWS_AS(spec.validate(), InvalidSpec);
}

TEST_CASE("unit sphere sample lies on the sphere") {
  const Eigen::MatrixXd d = unit_sphere_sample(100);
  CHECK((d.rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(d.colwise().mean().norm() < 0.05);
}

TEST_CASE("domain files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "stpsm_test_surfaces";
  std::filesystem::create_directories(dir);
  const ShapeDomain e = ShapeDomain::ellipsoid(Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d(1.1, 0.9, 0.7), 1e-6);
  write_domain(dir / "e.domain", e);
  const ShapeDomain e2 = read_domain(dir / "e.domain");
  const auto& k = std::get<Ellipsoid>(e2.kind());
  CHECK(k.radii == Eigen::Vector3d(1.1, 0.9, 0.7));
  CHECK(k.center == Eigen::Vector3d(0.1, 0.2, 0.3));
  CHECK(e2.surface_tol() == 1e-6);

  const ShapeDomain g = sampled_sphere(0.2);
  write_domain(dir / "g.sdfgrid", g);
  const ShapeDomain g2 = read_domain(dir / "g.sdfgrid");
  const auto& a = std::get<SdfGrid>(g.kind());
  const auto& b = std::get<SdfGrid>(g2.kind());
  CHECK(a.dims == b.dims);
  CHECK(a.values == b.values);
  CHECK((a.origin - b.origin).norm() < 1e-12);
  CHECK((a.spacing - b.spacing).norm() < 1e-12);
  CHECK_THROWS_AS(read_domain(dir / "missing.domain"), IoError);
  std::filesystem::remove_all(dir);
}
