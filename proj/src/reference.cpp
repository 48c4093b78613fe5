#include "noids/reference.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

namespace noids {

namespace {

constexpr double kPi = std::numbers::pi;

double scherk_m2(const ScherkParams& prm) {
  prm.space.validate();
  const double m2 = -prm.space.kappa_e();
  if (!(m2 > 0.0)) throw DomainError("Scherk graph needs kappa + 4H^2 < 0");
  if (prm.sign != 1 && prm.sign != -1) throw DomainError("Scherk sign must be +1 or -1");
  return m2;
}

void check_angle(double s) {
  if (!(s >= 0.0 && s < kPi / 2)) throw DomainError("Scherk angle outside [0, pi/2)");
}

// sqrt(4H^2 + m^2 sec^2 t)
double root(double h, double m2, double s) {
  const double c = std::cos(s);
  return std::sqrt(4.0 * h * h + m2 / (c * c));
}

// int_0^s sqrt(4H^2 + m^2 sec^2 t) dt = m asinh(tan s) + int_0^s 4H^2 / (sqrt(...) + m sec t) dt
double sec_integral(double h, double m2, double s, double tol) {
  const double m = std::sqrt(m2);
  double rest = 0.0;
  if (h != 0.0 && s > 0.0) {
    auto f = [&](double t) {
      const double sec = 1.0 / std::cos(t);
      return 4.0 * h * h / (std::sqrt(4.0 * h * h + m2 * sec * sec) + m * sec);
    };
    rest = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, s, 20, tol);
  }
  return m * std::asinh(std::tan(s)) + rest;
}

}  // namespace

double scherk_height(const ScherkParams& prm, double s) {
  const double m2 = scherk_m2(prm);
  check_angle(s);
  const double h = prm.space.h_mean;
  return (2.0 * h * s + prm.sign * sec_integral(h, m2, s, 1e-14)) / m2;
}

double scherk_slope(const ScherkParams& prm, double s) {
  const double m2 = scherk_m2(prm);
  check_angle(s);
  const double h = prm.space.h_mean;
  return (2.0 * h + prm.sign * root(h, m2, s)) / m2;
}

double scherk_curvature(const ScherkParams& prm, double s) {
  const double m2 = scherk_m2(prm);
  check_angle(s);
  const double h = prm.space.h_mean;
  const double c = std::cos(s);
  return prm.sign * std::tan(s) / (c * c * root(h, m2, s));
}

double scherk_w(const ScherkParams& prm, double s) {
  const double m2 = scherk_m2(prm);
  const double h = prm.space.h_mean;
  const double du = scherk_slope(prm, s);
  const double s2 = std::sin(s) * std::sin(s);
  return 1.0 + 4.0 * h * h / m2 - 4.0 * h * s2 * du + m2 * s2 * du * du;
}

double scherk_conservation_residual(const ScherkParams& prm, double s) {
  const double m2 = scherk_m2(prm);
  const double h = prm.space.h_mean;
  const double a = 2.0 * h - m2 * scherk_slope(prm, s);
  return a * a / scherk_w(prm, s) - m2;
}

GraphJet scherk_jet(const ScherkParams& prm, const Vec2& p) {
  if (!(p.x() > 0.0 && p.y() >= 0.0)) throw DomainError("Scherk jet needs x > 0, y >= 0");
  const double x = p.x(), y = p.y();
  const double r2 = x * x + y * y;
  const double s = std::atan2(y, x);
  const double d1 = scherk_slope(prm, s);
  const double d2 = scherk_curvature(prm, s);
  const double sx = -y / r2, sy = x / r2;
  const double sxx = 2.0 * x * y / (r2 * r2), syy = -sxx, sxy = (y * y - x * x) / (r2 * r2);
  GraphJet j;
  j.u = scherk_height(prm, s);
  j.ux = d1 * sx;
  j.uy = d1 * sy;
  j.uxx = d2 * sx * sx + d1 * sxx;
  j.uxy = d2 * sx * sy + d1 * sxy;
  j.uyy = d2 * sy * sy + d1 * syy;
  return j;
}

double mce_residual(const Space& space, const GraphJet& j, const Vec2& p) {
  space.base().check(p);
  const double h = space.tau();
  if (space.model() == Model::HalfPlane) {
    const double m2 = -space.params().kappa_e();
    const double m = std::sqrt(m2);
    const double y = p.y();
    const double a = m * y * j.ux + 2.0 * h / m;
    const double b = m * y * j.uy;
    const double w = 1.0 + a * a + b * b;
    const double wx = 2.0 * a * m * y * j.uxx + 2.0 * b * m * y * j.uxy;
    const double wy = 2.0 * a * (m * j.ux + m * y * j.uxy) + 2.0 * b * (m * j.uy + m * y * j.uyy);
    return 2.0 * w * (j.uxx + j.uyy) - ((2.0 * h / (y * m2) + j.ux) * wx + j.uy * wy);
  }
  const Vec3 th = space.theta(p);
  const double a = th.x() + j.ux, b = th.y() + j.uy;
  const double ax = j.uxx, ay = j.uxy - h, bx = j.uxy + h, by = j.uyy;
  const double s2 = 1.0 + a * a + b * b;
  return (ax + by) * s2 - (a * (a * ax + b * bx) + b * (a * ay + b * by));
}

ScherkBarrier::ScherkBarrier(const SpaceParams& space, const Vec2& p, double heading, bool left,
                             int sign)
    : prm_{space, sign}, space_(space) {
  scherk_m2(prm_);
  // standard graph: divergence line x = 0 traversed upward, finite on its right (x > 0)
  const Vec3 o(0.0, 1.0, 0.0);
  from_standard_ = Isometry::moving(space_, o, kPi / 2, Vec3(p.x(), p.y(), 0.0),
                                    left ? heading + kPi : heading);
  to_standard_ = from_standard_.inverse();
}

double ScherkBarrier::operator()(const Vec2& q) const {
  const Vec2 r = to_standard_.base_map(q);
  if (!(r.x() > 0.0)) return prm_.sign * kInf;
  const double s = std::atan2(r.y(), r.x());
  if (!(s < kPi / 2)) return prm_.sign * kInf;
  const double u = scherk_height(prm_, s);
  return from_standard_(Vec3(r.x(), r.y(), u)).z() + offset;
}

HelicoidBarrier::HelicoidBarrier(const Vec2& p, double heading, double axis_offset, double width)
    : p_(p), h_(heading), axis_(axis_offset), b_(width) {
  if (!(width > 0.0)) throw DomainError("helicoid width must be positive");
}

double HelicoidBarrier::operator()(const Vec2& q) const {
  const Vec2 d = q - p_;
  const double t = std::cos(h_) * d.x() + std::sin(h_) * d.y();
  const double n = -std::sin(h_) * d.x() + std::cos(h_) * d.y();
  // n in (0, pi b): angle n / b - pi/2 runs over (-pi/2, pi/2) and diverges at n = 0
  if (!(n > 0.0 && n < kPi * b_)) return kInf;
  return -(t - axis_) * std::tan(n / b_ - kPi / 2) + offset;
}

SurfacePatch vertical_plane(const Space& space, const Vec2& p, double heading, double half_length,
                            double half_height) {
  if (!(half_length > 0.0 && half_height > 0.0)) throw DomainError("extents must be positive");
  const Base base = space.base();
  PatchFn f = [base, p, heading](double u, double v) {
    const Vec2 q = base.shoot(p, heading, u);
    return Vec3(q.x(), q.y(), v);
  };
  return {f, -half_length, half_length, -half_height, half_height};
}

SurfacePatch umbrella_patch(const Space& space, const Vec3& c, double radius) {
  if (!(radius > 0.0)) throw DomainError("extents must be positive");
  PatchFn f = [space, c](double u, double v) {
    const double r = std::hypot(u, v);
    if (r == 0.0) return c;
    const Vec2 q = space.base().shoot(c.head<2>(), std::atan2(v, u), r);
    return Vec3(q.x(), q.y(), c.z() + space.lift_step(c.head<2>(), q));
  };
  const double e = radius / std::sqrt(2.0);
  return {f, -e, e, -e, e};
}

SurfacePatch slice_patch(const Space& space, const Vec3& a, double heading, double half_length,
                         double half_width) {
  if (!(half_length > 0.0 && half_width > 0.0)) throw DomainError("extents must be positive");
  PatchFn f = [space, a, heading](double u, double v) {
    double h_end = 0.0;
    space.base().shoot(a.head<2>(), heading, u, &h_end);
    const Vec3 c = space.horizontal_ray(a, heading, u);
    return space.horizontal_ray(c, h_end + kPi / 2, v);
  };
  return {f, -half_length, half_length, -half_width, half_width};
}

SurfacePatch helicoid_patch(const Space& space, double pitch, double radius, double half_height,
                            const Vec3& c, double heading0) {
  if (std::isinf(pitch)) return umbrella_patch(space, c, radius);
  if (!(radius > 0.0 && half_height > 0.0)) throw DomainError("extents must be positive");
  const double rate = pitch - space.tau();
  PatchFn f = [space, c, rate, heading0](double u, double v) {
    return space.horizontal_ray(Vec3(c.x(), c.y(), c.z() + v), heading0 + rate * v, u);
  };
  return {f, -radius, radius, -half_height, half_height};
}

}  // namespace noids
