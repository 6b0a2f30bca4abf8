#include "stpsm/surfaces/shape_domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stpsm/core/errors.hpp"

namespace stpsm {

namespace {

double robust_length(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  if (m == 0.0) return 0.0;
  return m * std::hypot(a / m, b / m);
}

double robust_length(double a, double b, double c) {
  const double m = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (m == 0.0) return 0.0;
  const double x = a / m, y = b / m, z = c / m;
  return m * std::sqrt(x * x + y * y + z * z);
}

constexpr int kMaxBisections = 2200;

double root_2d(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : robust_length(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < kMaxBisections; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = z1 / (s + 1.0);
    g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
    if (g > 0.0)
      s0 = s;
    else if (g < 0.0)
      s1 = s;
    else
      break;
  }
  return s;
}

double root_3d(double r0, double r1, double z0, double z1, double z2, double g) {
  const double n0 = r0 * z0;
  const double n1 = r1 * z1;
  double s0 = z2 - 1.0;
  double s1 = g < 0.0 ? 0.0 : robust_length(n0, n1, z2) - 1.0;
  double s = 0.0;
  for (int i = 0; i < kMaxBisections; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = n1 / (s + r1);
    const double ratio2 = z2 / (s + 1.0);
    g = ratio0 * ratio0 + ratio1 * ratio1 + ratio2 * ratio2 - 1.0;
    if (g > 0.0)
      s0 = s;
    else if (g < 0.0)
      s1 = s;
    else
      break;
  }
  return s;
}

// Semi-axes e0 >= e1 > 0, query (y0, y1) in the first quadrant.
void closest_ellipse(double e0, double e1, double y0, double y1, double& x0, double& x1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g != 0.0) {
        const double r0 = (e0 / e1) * (e0 / e1);
        const double sbar = root_2d(r0, z0, z1, g);
        x0 = r0 * y0 / (sbar + r0);
        x1 = y1 / (sbar + 1.0);
      } else {
        x0 = y0;
        x1 = y1;
      }
    } else {
      x0 = 0.0;
      x1 = e1;
    }
  } else {
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
      const double xde0 = numer0 / denom0;
      x0 = e0 * xde0;
      x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    } else {
      x0 = e0;
      x1 = 0.0;
    }
  }
}

// Semi-axes e0 >= e1 >= e2 > 0, query in the first octant.
Eigen::Vector3d closest_sorted(const Eigen::Vector3d& e, const Eigen::Vector3d& y) {
  Eigen::Vector3d x;
  if (y(2) > 0.0) {
    if (y(1) > 0.0) {
      if (y(0) > 0.0) {
        const double z0 = y(0) / e(0), z1 = y(1) / e(1), z2 = y(2) / e(2);
        const double g = z0 * z0 + z1 * z1 + z2 * z2 - 1.0;
        if (g != 0.0) {
          const double r0 = (e(0) / e(2)) * (e(0) / e(2));
          const double r1 = (e(1) / e(2)) * (e(1) / e(2));
          const double sbar = root_3d(r0, r1, z0, z1, z2, g);
          x(0) = r0 * y(0) / (sbar + r0);
          x(1) = r1 * y(1) / (sbar + r1);
          x(2) = y(2) / (sbar + 1.0);
        } else {
          x = y;
        }
      } else {
        x(0) = 0.0;
        closest_ellipse(e(1), e(2), y(1), y(2), x(1), x(2));
      }
    } else {
      x(1) = 0.0;
      if (y(0) > 0.0) {
        closest_ellipse(e(0), e(2), y(0), y(2), x(0), x(2));
      } else {
        x(0) = 0.0;
        x(2) = e(2);
      }
    }
  } else {
    const double denom0 = e(0) * e(0) - e(2) * e(2);
    const double denom1 = e(1) * e(1) - e(2) * e(2);
    const double numer0 = e(0) * y(0);
    const double numer1 = e(1) * y(1);
    bool computed = false;
    if (numer0 < denom0 && numer1 < denom1) {
      const double xde0 = numer0 / denom0;
      const double xde1 = numer1 / denom1;
      const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
      if (discr > 0.0) {
        x(0) = e(0) * xde0;
        x(1) = e(1) * xde1;
        x(2) = e(2) * std::sqrt(discr);
        computed = true;
      }
    }
    if (!computed) {
      x(2) = 0.0;
      closest_ellipse(e(0), e(1), y(0), y(1), x(0), x(1));
    }
  }
  return x;
}

double default_tol(const Box& shape_box) { return 1e-4 * shape_box.diagonal(); }

double lerp(double a, double b, double w) { return a + (b - a) * w; }

}  // namespace

Eigen::Vector3d closest_point_on_ellipsoid(const Ellipsoid& e, const Eigen::Vector3d& p) {
  const Eigen::Vector3d local = p - e.center;
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return e.radii(a) > e.radii(b); });
  Eigen::Vector3d sorted_radii, sorted_query;
  for (int i = 0; i < 3; ++i) {
    sorted_radii(i) = e.radii(order[i]);
    sorted_query(i) = std::abs(local(order[i]));
  }
  const Eigen::Vector3d sorted_closest = closest_sorted(sorted_radii, sorted_query);
  Eigen::Vector3d closest;
  for (int i = 0; i < 3; ++i) {
    const int axis = order[i];
    closest(axis) = local(axis) < 0.0 ? -sorted_closest(i) : sorted_closest(i);
  }
  return closest + e.center;
}

ShapeDomain::ShapeDomain() : ShapeDomain(Sphere{}, 0.0) {}

ShapeDomain::ShapeDomain(Kind kind, double surface_tol) : kind_(std::move(kind)) {
  if (const auto* s = std::get_if<Sphere>(&kind_)) {
    if (!(s->radius > 0.0) || !s->center.allFinite()) throw InvalidSpec("sphere radius must be positive");
    const Eigen::Vector3d r = Eigen::Vector3d::Constant(s->radius);
    shape_box_ = {s->center - r, s->center + r};
    bounds_ = {s->center - 3.0 * r, s->center + 3.0 * r};
    centroid_ = s->center;
  } else if (const auto* e = std::get_if<Ellipsoid>(&kind_)) {
    if (!(e->radii.array() > 0.0).all() || !e->center.allFinite())
      throw InvalidSpec("ellipsoid radii must be positive");
    const Eigen::Vector3d pad = e->radii + Eigen::Vector3d::Constant(2.0 * e->radii.maxCoeff());
    shape_box_ = {e->center - e->radii, e->center + e->radii};
    bounds_ = {e->center - pad, e->center + pad};
    centroid_ = e->center;
  } else {
    const auto& g = std::get<SdfGrid>(kind_);
    if (g.dims[0] < 2 || g.dims[1] < 2 || g.dims[2] < 2)
      throw InvalidSpec("sdf grid needs at least 2 samples per axis");
    if (!(g.spacing.array() > 0.0).all()) throw InvalidSpec("sdf grid spacing must be positive");
    const std::size_t expected = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
    if (g.values.size() != expected) throw InvalidSpec("sdf grid value count does not match dims");
    if (!std::all_of(g.values.begin(), g.values.end(), [](float v) { return std::isfinite(v); }))
      throw InvalidSpec("sdf grid holds non-finite values");
    const Eigen::Vector3d extent(g.spacing(0) * (g.dims[0] - 1), g.spacing(1) * (g.dims[1] - 1),
                                 g.spacing(2) * (g.dims[2] - 1));
    bounds_ = {g.origin, g.origin + extent};
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::size_t inside = 0;
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          if (g.values[g.index(i, j, k)] > 0.0f) continue;
          const Eigen::Vector3d p = g.origin + g.spacing.cwiseProduct(Eigen::Vector3d(i, j, k));
          lo = lo.cwiseMin(p);
          hi = hi.cwiseMax(p);
          sum += p;
          ++inside;
        }
    if (inside == 0) {
      shape_box_ = bounds_;
      centroid_ = 0.5 * (bounds_.lower + bounds_.upper);
    } else {
      shape_box_ = {(lo - g.spacing).cwiseMax(bounds_.lower), (hi + g.spacing).cwiseMin(bounds_.upper)};
      centroid_ = sum / static_cast<double>(inside);
    }
  }
  surface_tol_ = surface_tol > 0.0 ? surface_tol : default_tol(shape_box_);
}

ShapeDomain ShapeDomain::sphere(const Eigen::Vector3d& center, double radius, double surface_tol) {
  return ShapeDomain(Sphere{center, radius}, surface_tol);
}

ShapeDomain ShapeDomain::ellipsoid(const Eigen::Vector3d& center, const Eigen::Vector3d& radii, double surface_tol) {
  return ShapeDomain(Ellipsoid{center, radii}, surface_tol);
}

ShapeDomain ShapeDomain::grid(SdfGrid grid, double surface_tol) { return ShapeDomain(std::move(grid), surface_tol); }

SdfSample ShapeDomain::evaluate(const Eigen::Vector3d& p) const {
  if (!p.allFinite() || !bounds_.contains(p)) throw OutOfBounds("query point outside the domain bounding box");
  SdfSample out;
  if (const auto* s = std::get_if<Sphere>(&kind_)) {
    const Eigen::Vector3d offset = p - s->center;
    const double r = offset.norm();
    out.value = r - s->radius;
    out.gradient = r > 0.0 ? Eigen::Vector3d(offset / r) : Eigen::Vector3d::UnitX();
  } else if (const auto* e = std::get_if<Ellipsoid>(&kind_)) {
    const Eigen::Vector3d q = closest_point_on_ellipsoid(*e, p);
    const Eigen::Vector3d local = p - e->center;
    const double implicit = local.cwiseQuotient(e->radii).squaredNorm() - 1.0;
    const double dist = (p - q).norm();
    out.value = implicit < 0.0 ? -dist : dist;
    const Eigen::Vector3d normal = (q - e->center).cwiseQuotient(e->radii.cwiseProduct(e->radii));
    out.gradient = normal.normalized();
  } else {
    const auto& g = std::get<SdfGrid>(kind_);
    const Eigen::Vector3d u = (p - g.origin).cwiseQuotient(g.spacing);
    std::array<int, 3> i0{};
    std::array<double, 3> w{};
    for (int a = 0; a < 3; ++a) {
      i0[a] = std::clamp(static_cast<int>(std::floor(u(a))), 0, g.dims[a] - 2);
      w[a] = std::clamp(u(a) - i0[a], 0.0, 1.0);
    }
    auto v = [&](int di, int dj, int dk) {
      return static_cast<double>(g.values[g.index(i0[0] + di, i0[1] + dj, i0[2] + dk)]);
    };
    const double c000 = v(0, 0, 0), c100 = v(1, 0, 0), c010 = v(0, 1, 0), c110 = v(1, 1, 0);
    const double c001 = v(0, 0, 1), c101 = v(1, 0, 1), c011 = v(0, 1, 1), c111 = v(1, 1, 1);
    const double c00 = lerp(c000, c100, w[0]), c10 = lerp(c010, c110, w[0]);
    const double c01 = lerp(c001, c101, w[0]), c11 = lerp(c011, c111, w[0]);
    const double c0 = lerp(c00, c10, w[1]), c1 = lerp(c01, c11, w[1]);
    out.value = lerp(c0, c1, w[2]);
    const double dx0 = lerp(c100 - c000, c110 - c010, w[1]);
    const double dx1 = lerp(c101 - c001, c111 - c011, w[1]);
    const double dy0 = lerp(c010 - c000, c110 - c100, w[0]);
    const double dy1 = lerp(c011 - c001, c111 - c101, w[0]);
    out.gradient(0) = lerp(dx0, dx1, w[2]) / g.spacing(0);
    out.gradient(1) = lerp(dy0, dy1, w[2]) / g.spacing(1);
    out.gradient(2) = (c1 - c0) / g.spacing(2);
  }
  return out;
}

SdfSample sdf_eval(const ShapeDomain& domain, const Eigen::Vector3d& p) { return domain.evaluate(p); }

SdfGrid sample_grid(const ShapeDomain& domain, double spacing, const Box& box) {
  if (!(spacing > 0.0)) throw InvalidSpec("grid spacing must be positive");
  SdfGrid g;
  g.spacing = Eigen::Vector3d::Constant(spacing);
  g.origin = box.lower;
  for (int a = 0; a < 3; ++a)
    g.dims[a] = std::max(2, static_cast<int>(std::floor((box.upper(a) - box.lower(a)) / spacing + 1e-9)) + 1);
  g.values.resize(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2]);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const Eigen::Vector3d p = g.origin + spacing * Eigen::Vector3d(i, j, k);
        g.values[g.index(i, j, k)] = static_cast<float>(domain.evaluate(p).value);
      }
  return g;
}

}  // namespace stpsm
