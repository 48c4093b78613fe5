#include "doctest.h"
#include "noids/reference.hpp"
#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace noids;
using oracle::pi;

namespace {

// Direct quadrature of the unpeeled integrand, valid away from pi/2.
double scherk_direct(double kappa, double h, double s, int sign) {
  const double m2 = -(kappa + 4 * h * h);
  auto f = [&](double t) { return std::sqrt((4 * h * h * std::cos(t) * std::cos(t) + m2) / (1 - std::sin(t) * std::sin(t))); };
  const double i = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, s, 25, 1e-14);
  return (2 * h * s + sign * i) / m2;
}

// Residual with w and its gradient by finite differences of the defining formula.
double fd_residual(double kappa, double h, const std::function<double(double, double)>& u, double x, double y) {
  const double m2 = -(kappa + 4 * h * h), m = std::sqrt(m2);
  const double e = 1e-4;
  auto ux = [&](double a, double b) { return (u(a + e, b) - u(a - e, b)) / (2 * e); };
  auto uy = [&](double a, double b) { return (u(a, b + e) - u(a, b - e)) / (2 * e); };
  auto w = [&](double a, double b) {
    const double lam = 1.0 / (m * b);
    const double p = ux(a, b) / lam + 2 * h * lam * b, q = uy(a, b) / lam;
    return 1 + p * p + q * q;
  };
  const double lap = (u(x + e, y) + u(x - e, y) + u(x, y + e) + u(x, y - e) - 4 * u(x, y)) / (e * e);
  const double wx = (w(x + e, y) - w(x - e, y)) / (2 * e);
  const double wy = (w(x, y + e) - w(x, y - e)) / (2 * e);
  return 2 * w(x, y) * lap - ((2 * h / (y * m2) + ux(x, y)) * wx + uy(x, y) * wy);
}

std::vector<SpaceParams> surface_branches() { return {{-1, 0}, {-1, 0.3}, {-1, 0.5}, {0, 0}}; }

// max |H| over an n x n interior grid
double max_mean_curvature(const Space& sp, const SurfacePatch& patch, int n = 10, double step = 1e-3) {
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = patch.u0 + (patch.u1 - patch.u0) * (0.05 + 0.9 * i / (n - 1));
      const double v = patch.v0 + (patch.v1 - patch.v0) * (0.05 + 0.9 * j / (n - 1));
      worst = std::max(worst, std::abs(mean_curvature(sp, patch.eval, u, v, step)));
    }
  return worst;
}

}  // namespace

TEST_CASE("Scherk height at pi/4 in H^2 x R") {
  ScherkParams prm{{-1, 0}, 1};
  CHECK(std::abs(scherk_height(prm, pi / 4) - std::log(1 + std::sqrt(2.0))) < 1e-12);
  CHECK(scherk_height(prm, 0.0) == 0.0);
}

TEST_CASE("Scherk height matches direct quadrature") {
  for (double h : {0.0, 0.3, 0.49})
    for (int sign : {1, -1})
      for (double s = 0.0; s < 1.3; s += 0.1) {
        ScherkParams prm{{-1, h}, sign};
        CHECK(std::abs(scherk_height(prm, s) - scherk_direct(-1, h, s, sign)) < 1e-10);
      }
  ScherkParams prm{{-2, 0.2}, 1};
  CHECK(std::abs(scherk_height(prm, 1.0) - scherk_direct(-2, 0.2, 1.0, 1)) < 1e-10);
}

TEST_CASE("Scherk branch selection") {
  for (double h : {0.0, 0.3, 0.49}) {
    ScherkParams prm{{-1, h}, 1};
    double prev = 0.0;
    for (double s = 0.01; s < pi / 2; s += 0.01) {
      const double u = scherk_height(prm, s);
      CHECK(u >= prev);
      prev = u;
    }
    CHECK(scherk_height(prm, pi / 2 - 1e-9) > 10.0);
  }
}

TEST_CASE("Scherk slope and curvature against finite differences") {
  for (double h : {0.0, 0.3, 0.49})
    for (int sign : {1, -1}) {
      ScherkParams prm{{-1, h}, sign};
      for (double s = 0.1; s < 1.4; s += 0.1) {
        const double e = 1e-5;
        const double fd1 = (scherk_height(prm, s + e) - scherk_height(prm, s - e)) / (2 * e);
        const double fd2 = (scherk_slope(prm, s + e) - scherk_slope(prm, s - e)) / (2 * e);
        CHECK(std::abs(fd1 - scherk_slope(prm, s)) < 1e-7 * (1 + std::abs(fd1)));
        CHECK(std::abs(fd2 - scherk_curvature(prm, s)) < 1e-6 * (1 + std::abs(fd2)));
      }
    }
}

TEST_CASE("Scherk conservation law") {
  for (double h : {0.0, 0.3, 0.49}) {
    ScherkParams prm{{-1, h}, 1};
    const double m2 = 1 - 4 * h * h;
    CHECK(std::abs(scherk_w(prm, 0.0) - (1 + 4 * h * h / m2)) < 1e-14);
    for (int i = 0; i < 200; ++i) {
      const double s = (pi / 2) * i / 200.0;
      CHECK(std::abs(scherk_conservation_residual(prm, s)) < 1e-10);
    }
  }
}

TEST_CASE("Scherk graph solves the minimal graph equation") {
  for (double h : {0.0, 0.3, 0.49})
    for (int sign : {1, -1}) {
      ScherkParams prm{{-1, h}, sign};
      Space sp(prm.space);
      double worst = 0.0;
      for (double s = 0.0; s <= pi / 2 - 0.05; s += 0.05)
        for (double r : {0.5, 1.0, 2.0, 3.0}) {
          const Vec2 p(r * std::cos(s), r * std::sin(s) + 1e-3);
          worst = std::max(worst, std::abs(mce_residual(sp, scherk_jet(prm, p), p)));
        }
      CHECK(worst < 1e-6);
    }
}

TEST_CASE("Scherk graph has zero mean curvature as a surface") {
  for (double h : {0.0, 0.3}) {
    ScherkParams prm{{-1, h}, 1};
    Space sp(prm.space);
    PatchFn graph = [&](double x, double y) { return Vec3(x, y, scherk_jet(prm, {x, y}).u); };
    for (double x : {0.5, 1.0, 2.0})
      for (double y : {0.3, 0.8, 1.5}) CHECK(std::abs(mean_curvature(sp, graph, x, y)) < 1e-5);
  }
}

TEST_CASE("Scherk rejects flat models and bad angles") {
  CHECK_THROWS_AS(scherk_height({{0, 0}, 1}, 0.5), DomainError);
  CHECK_THROWS_AS(scherk_height({{-1, 0.5}, 1}, 0.5), DomainError);
  CHECK_THROWS_AS(scherk_height({{-1, 0}, 1}, pi / 2), DomainError);
  CHECK_THROWS_AS(scherk_height({{-1, 0}, 1}, -0.1), DomainError);
}

TEST_CASE("mce_residual examples") {
  Space sp({-1, 0});
  CHECK(mce_residual(sp, GraphJet{3.0, 0, 0, 0, 0, 0}, {0.3, 1.2}) == 0.0);
  // tilted plane and a saddle against a finite-difference evaluation of the same operator
  for (const Vec2 p : {Vec2(0.3, 1.2), Vec2(-1.0, 0.5), Vec2(2.0, 2.5)}) {
    const double x = p.x(), y = p.y();
    CHECK(std::abs(mce_residual(sp, GraphJet{x, 1, 0, 0, 0, 0}, p) -
                   fd_residual(-1, 0, [](double a, double) { return a; }, x, y)) < 1e-5);
    CHECK(std::abs(mce_residual(sp, GraphJet{x * y, y, x, 0, 1, 0}, p) -
                   fd_residual(-1, 0, [](double a, double b) { return a * b; }, x, y)) < 1e-4);
  }
  Space sh({-1, 0.3});
  auto u = [](double a, double b) { return std::sin(a) * b * b; };
  for (const Vec2 p : {Vec2(0.3, 1.2), Vec2(-1.0, 0.5)}) {
    const double x = p.x(), y = p.y();
    GraphJet j{u(x, y), std::cos(x) * y * y, 2 * std::sin(x) * y, -std::sin(x) * y * y, 2 * std::cos(x) * y,
               2 * std::sin(x)};
    CHECK(std::abs(mce_residual(sh, j, p) - fd_residual(-1, 0.3, u, x, y)) < 1e-4);
  }
}

TEST_CASE("mce_residual is twice the mean curvature times S^3 in flat models") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (SpaceParams prm : {SpaceParams{-1, 0.5}, SpaceParams{0, 0}, SpaceParams{-0.36, 0.3}}) {
    Space sp(prm);
    CHECK(std::abs(mce_residual(sp, GraphJet{}, {0.4, -0.7})) < 1e-15);
    for (int k = 0; k < 20; ++k) {
      const GraphJet j{0.0, d(rng), d(rng), d(rng), d(rng), d(rng)};
      const Vec2 p(d(rng), d(rng));
      PatchFn graph = [&](double x, double y) {
        const double dx = x - p.x(), dy = y - p.y();
        return Vec3(x, y, j.ux * dx + j.uy * dy + 0.5 * (j.uxx * dx * dx + 2 * j.uxy * dx * dy + j.uyy * dy * dy));
      };
      const Vec3 th = sp.theta(p);
      const double a = th.x() + j.ux, b = th.y() + j.uy;
      const double s3 = std::pow(1 + a * a + b * b, 1.5);
      CHECK(std::abs(mce_residual(sp, j, p) / s3 - 2 * mean_curvature(sp, graph, p.x(), p.y())) < 1e-7);
    }
  }
}

TEST_CASE("Transported Scherk barrier") {
  for (SpaceParams prm : {SpaceParams{-1, 0}, SpaceParams{-1, 0.3}}) {
    Space sp(prm);
    ScherkBarrier id(prm, {0, 1}, pi / 2, false);
    ScherkParams sc{prm, 1};
    CHECK(std::abs(id({1.0, 0.7}) - scherk_height(sc, std::atan2(0.7, 1.0))) < 1e-12);
    CHECK(std::isinf(id({-0.2, 1.0})));

    const Vec2 p(0.4, 1.3);
    const double hd = 0.7;
    for (bool left : {true, false}) {
      ScherkBarrier b(prm, p, hd, left);
      const Vec2 in = sp.base().shoot(sp.base().shoot(p, hd, 0.3), hd + (left ? pi / 2 : -pi / 2), 0.5);
      const Vec2 out = sp.base().shoot(sp.base().shoot(p, hd, 0.3), hd + (left ? -pi / 2 : pi / 2), 0.5);
      CHECK(std::isfinite(b(in)));
      CHECK(std::isinf(b(out)));
      const Vec2 near = sp.base().shoot(sp.base().shoot(p, hd, 0.3), hd + (left ? pi / 2 : -pi / 2), 1e-6);
      CHECK(b(near) > b(in) + 5.0);
      PatchFn graph = [&](double x, double y) { return Vec3(x, y, b({x, y})); };
      CHECK(std::abs(mean_curvature(sp, graph, in.x(), in.y())) < 1e-5);
    }
  }
}

TEST_CASE("Euclidean helicoid barrier") {
  Space sp({0, 0});
  HelicoidBarrier b({0.5, -0.2}, 0.3, -2.0, 1.5);
  const Vec2 dir(std::cos(0.3), std::sin(0.3)), nor(-std::sin(0.3), std::cos(0.3));
  const Vec2 q = Vec2(0.5, -0.2) + 1.0 * dir + 0.8 * nor;
  PatchFn graph = [&](double x, double y) { return Vec3(x, y, b({x, y})); };
  CHECK(std::abs(mean_curvature(sp, graph, q.x(), q.y())) < 1e-6);
  CHECK(b(Vec2(0.5, -0.2) + dir + 1e-7 * nor) > 1e6);
  CHECK(std::isinf(b(Vec2(0.5, -0.2) - 0.1 * nor)));
}

TEST_CASE("Reference families are minimal") {
  for (const SpaceParams& prm : surface_branches()) {
    Space sp(prm);
    CAPTURE(prm.kappa);
    CAPTURE(prm.h_mean);
    const Vec3 c = sp.base().hyperbolic() ? Vec3(0.3, 1.1, 0.2) : Vec3(0.3, -0.4, 0.2);
    CHECK(max_mean_curvature(sp, vertical_plane(sp, c.head<2>(), 0.4, 1.0, 1.0)) < 1e-5);
    CHECK(max_mean_curvature(sp, umbrella_patch(sp, c, 1.0)) < 1e-5);
    CHECK(max_mean_curvature(sp, slice_patch(sp, c, 0.4, 1.0, 1.0)) < 1e-5);
    for (double s : {0.0, prm.tau(), 1.0}) {
      CAPTURE(s);
      CHECK(max_mean_curvature(sp, helicoid_patch(sp, s, 1.0, 1.0, c, 0.2)) < 1e-5);
    }
    for (double s : {20.0, -20.0}) {
      CAPTURE(s);
      CHECK(max_mean_curvature(sp, helicoid_patch(sp, s, 1.0, 0.1, c, 0.2), 10, 1e-4) < 1e-5);
    }
  }
}

TEST_CASE("Helicoid special members") {
  for (const SpaceParams& prm : surface_branches()) {
    Space sp(prm);
    const Vec3 c = sp.base().hyperbolic() ? Vec3(0.3, 1.1, 0.2) : Vec3(0.3, -0.4, 0.2);
    // pitch tau: vertical plane over the geodesic with heading heading0
    const SurfacePatch vp = helicoid_patch(sp, prm.tau(), 1.0, 1.0, c, 0.2);
    double worst = 0.0;
    for (double u = -0.9; u <= 0.9; u += 0.3)
      for (double v = -0.9; v <= 0.9; v += 0.3) worst = std::max(worst, std::abs(sp.base().side(c.head<2>(), 0.2, vp(u, v).head<2>())));
    CHECK(worst < 1e-8);
    // infinite pitch: umbrella, horizontal at the centre
    const SurfacePatch um = helicoid_patch(sp, kInf, 1.0, 1.0, c);
    for (double u = -0.5; u <= 0.5; u += 0.25)
      for (double v = -0.5; v <= 0.5; v += 0.25) {
        const Vec3 q = um(u, v);
        CHECK(std::abs(q.z() - sp.umbrella_height(c, q.head<2>())) < 1e-9);
      }
  }
  // product case: slices are horizontal planes, and the Euclidean umbrella is the plane z = const
  Space e({0, 0});
  const SurfacePatch sl = slice_patch(e, {0.1, 0.2, 0.7}, 1.0, 1.0, 1.0);
  CHECK(std::abs(sl(0.4, -0.3).z() - 0.7) < 1e-12);
  Space hp({-1, 0});
  const SurfacePatch sl2 = slice_patch(hp, {0.1, 1.2, 0.7}, 1.0, 1.0, 1.0);
  CHECK(std::abs(sl2(0.4, -0.3).z() - 0.7) < 1e-12);
}

TEST_CASE("Umbrella tangent plane is horizontal only at the centre in Nil") {
  Space sp({-1, 0.5});
  const Vec3 c(0.2, 0.1, 0.0);
  const SurfacePatch um = umbrella_patch(sp, c, 1.0);
  auto normal_tilt = [&](double u, double v) {
    const double e = 1e-5;
    const Vec3 fu = (um(u + e, v) - um(u - e, v)) / (2 * e);
    const Vec3 fv = (um(u, v + e) - um(u, v - e)) / (2 * e);
    const Vec3 p = um(u, v);
    const Mat3 g = sp.metric(p);
    const Vec3 n = g.inverse() * fu.cross(fv);
    const Vec3 xi(0, 0, 1);
    return std::abs(std::abs(sp.inner(p, n, xi)) / sp.norm(p, n) - 1.0);
  };
  CHECK(normal_tilt(0.0, 0.0) < 1e-8);
  CHECK(normal_tilt(0.5, 0.3) > 1e-3);
}
