#pragma once

#include "noids/geometry.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <algorithm>
#include <vector>

namespace oracle {

using noids::Mat3;
using noids::Vec2;
using noids::Vec3;

inline constexpr double pi = std::numbers::pi;

inline std::array<Mat3, 3> fd_christoffels(const noids::Space& sp, const Vec3& p) {
  // step scaled to the chart's natural length at p
  const double h = sp.base().hyperbolic() ? 1e-3 * std::min(1.0, p.y()) : 1e-3;
  std::array<Mat3, 3> dg;
  for (int l = 0; l < 3; ++l) {
    Vec3 e = Vec3::Zero();
    e[l] = h;
    dg[l] = (8.0 * (sp.metric(p + e) - sp.metric(p - e)) - (sp.metric(p + 2.0 * e) - sp.metric(p - 2.0 * e))) /
            (12.0 * h);
  }
  const Mat3 gi = sp.metric(p).inverse();
  std::array<Mat3, 3> gam;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l) s += gi(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gam[k](i, j) = 0.5 * s;
      }
  return gam;
}

inline Mat3 fd_jacobian(const std::function<Vec3(const Vec3&)>& f, const Vec3& p, double h = 1e-5) {
  Mat3 J;
  for (int l = 0; l < 3; ++l) {
    Vec3 e = Vec3::Zero();
    e[l] = h;
    J.col(l) = (f(p + e) - f(p - e)) / (2.0 * h);
  }
  return J;
}

// Hyperbolic area of a geodesic triangle in the half-plane chart by slicing along
// vertical geodesics: area = int (1/y_lo(x) - 1/y_hi(x)) dx / m^2.
inline double sliced_triangle_area(double m, const Vec2& a, const Vec2& b, const Vec2& c) {
  struct Arc {
    double x0, x1, cx, r2;
  };
  std::vector<Arc> arcs;
  for (auto [p, q] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
    if (std::abs(p.x() - q.x()) < 1e-9) continue;  // vertical side
    const double cx = (q.squaredNorm() - p.squaredNorm()) / (2.0 * (q.x() - p.x()));
    arcs.push_back({std::min(p.x(), q.x()), std::max(p.x(), q.x()), cx,
                    (p.x() - cx) * (p.x() - cx) + p.y() * p.y()});
  }
  std::vector<double> xs{a.x(), b.x(), c.x()};
  std::sort(xs.begin(), xs.end());
  auto slice = [&](double x) {
    double lo = 1e300, hi = -1e300;
    for (const auto& arc : arcs)
      if (x >= arc.x0 && x <= arc.x1) {
        const double y = std::sqrt(std::max(arc.r2 - (x - arc.cx) * (x - arc.cx), 0.0));
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    return lo < hi ? 1.0 / lo - 1.0 / hi : 0.0;
  };
  double acc = 0.0;
  for (int i = 0; i < 2; ++i)
    if (xs[i + 1] > xs[i])
      acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(slice, xs[i], xs[i + 1], 20, 1e-13);
  return acc / (m * m);
}

inline Vec3 random_point(const noids::Space& sp, std::mt19937& rng) {
  std::uniform_real_distribution<double> ux(-3.0, 3.0), uy(0.2, 4.0), uz(-5.0, 5.0);
  if (sp.base().hyperbolic()) return {ux(rng), uy(rng), uz(rng)};
  return {ux(rng), ux(rng), uz(rng)};
}

inline std::vector<noids::SpaceParams> all_branches() {
  return {{-1.0, 0.0}, {-1.0, 0.3}, {-1.0, 0.49}, {-1.0, 0.5}, {0.0, 0.0}, {-2.0, 0.2}};
}

}  // namespace oracle
