#include "noids/geometry.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <numbers>

namespace noids {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFlatTol = 1e-14;

// Hyperboloid model of curvature -1, Minkowski form -X0^2 + X1^2 + X2^2.
using Vec3h = Eigen::Vector3d;

double mink(const Vec3h& a, const Vec3h& b) { return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3h to_hyp(const Vec2& p) {
  const double x = p.x(), y = p.y();
  const double r2 = x * x + y * y;
  return {(r2 + 1.0) / (2.0 * y), x / y, (r2 - 1.0) / (2.0 * y)};
}

Vec3h push(const Vec2& p, const Vec2& v) {
  const double x = p.x(), y = p.y();
  const double y2 = y * y;
  return {x / y * v.x() + (y2 - x * x - 1.0) / (2.0 * y2) * v.y(), v.x() / y - x / y2 * v.y(),
          x / y * v.x() + (y2 - x * x + 1.0) / (2.0 * y2) * v.y()};
}

Vec2 from_hyp(const Vec3h& X) {
  const double y = 1.0 / (X[0] - X[2]);
  return {X[1] * y, y};
}

Vec2 pull(const Vec3h& X, const Vec3h& dX) {
  const double y = 1.0 / (X[0] - X[2]);
  const double dy = -y * y * (dX[0] - dX[2]);
  return {dX[1] * y + X[1] * dy, dy};
}

Vec2 dir(double h) { return {std::cos(h), std::sin(h)}; }

double positive_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a;
}

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

std::string model_name(Model m) {
  switch (m) {
    case Model::HalfPlane: return "half-plane";
    case Model::Heisenberg: return "heisenberg";
    case Model::Euclidean: return "euclidean";
  }
  return "unknown";
}

double SpaceParams::kappa_e() const {
  const double k = kappa + 4.0 * h_mean * h_mean;
  return std::abs(k) < kFlatTol ? 0.0 : k;
}

Model SpaceParams::model() const {
  const double ke = kappa_e();
  if (ke < 0.0) return Model::HalfPlane;
  if (h_mean != 0.0) return Model::Heisenberg;
  return Model::Euclidean;
}

void SpaceParams::validate() const {
  if (!std::isfinite(kappa) || !std::isfinite(h_mean)) throw DomainError("non-finite space parameters");
  if (kappa > 0.0) throw DomainError("kappa must be <= 0");
  if (h_mean < 0.0 || h_mean > 0.5) throw DomainError("H must lie in [0, 1/2]");
  if (kappa_e() > 0.0) throw DomainError("kappa + 4H^2 must be <= 0");
}

// ---------------------------------------------------------------- Base

Base::Base(double kappa) : kappa_(std::abs(kappa) < kFlatTol ? 0.0 : kappa) {
  if (kappa_ > 0.0) throw DomainError("base curvature must be <= 0");
  m_ = kappa_ < 0.0 ? std::sqrt(-kappa_) : 0.0;
}

Vec2 Base::origin() const { return hyperbolic() ? Vec2(0.0, 1.0) : Vec2(0.0, 0.0); }

double Base::conformal(const Vec2& p) const { return hyperbolic() ? 1.0 / (m_ * p.y()) : 1.0; }

bool Base::contains(const Vec2& p) const {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && (!hyperbolic() || p.y() > 0.0);
}

void Base::check(const Vec2& p) const {
  if (!contains(p)) throw DomainError("base point outside the model domain");
}

double Base::distance(const Vec2& p, const Vec2& q) const {
  if (!hyperbolic()) return (q - p).norm();
  check(p);
  check(q);
  return 2.0 * std::asinh((q - p).norm() / (2.0 * std::sqrt(p.y() * q.y()))) / m_;
}

double Base::heading(const Vec2& p, const Vec2& q) const {
  if (!hyperbolic()) return std::atan2(q.y() - p.y(), q.x() - p.x());
  check(p);
  check(q);
  const double a = (q.x() - p.x()) / p.y();
  const double b = q.y() / p.y();
  if (a == 0.0) return b > 1.0 ? kPi / 2.0 : -kPi / 2.0;
  const double c = (a * a + (b - 1.0) * (b + 1.0)) / (2.0 * a);
  return a > 0.0 ? std::atan2(c, 1.0) : std::atan2(-c, -1.0);
}

double Base::arrival_heading(const Vec2& p, const Vec2& q) const { return wrap_angle(heading(q, p) + kPi); }

Vec2 Base::shoot(const Vec2& p, double h, double length, double* end_heading) const {
  if (!hyperbolic()) {
    if (end_heading) *end_heading = h;
    return p + length * dir(h);
  }
  check(p);
  const Vec3h P = to_hyp(p);
  const Vec3h V = push(p, p.y() * dir(h));
  const double t = m_ * length;
  const Vec3h X = std::cosh(t) * P + std::sinh(t) * V;
  const Vec2 q = from_hyp(X);
  if (end_heading) {
    const Vec3h dX = std::sinh(t) * P + std::cosh(t) * V;
    const Vec2 v = pull(X, dX);
    *end_heading = std::atan2(v.y(), v.x());
  }
  return q;
}

Vec2 Base::along(const Vec2& p, const Vec2& q, double t) const {
  if (!hyperbolic()) return p + t * (q - p);
  if (t == 0.0) return p;
  if (t == 1.0) return q;
  return shoot(p, heading(p, q), t * distance(p, q));
}

double Base::angle(const Vec2& vertex, const Vec2& a, const Vec2& b) const {
  return std::abs(wrap_angle(heading(vertex, a) - heading(vertex, b)));
}

double Base::side(const Vec2& p, double h, const Vec2& x) const {
  if (!hyperbolic()) return dir(h + kPi / 2.0).dot(x - p);
  const Vec3h W = push(p, p.y() * dir(h + kPi / 2.0));
  return std::asinh(mink(to_hyp(x), W)) / m_;
}

BaseCurve geodesic_path(const Base& base, const std::vector<Vec2>& vertices, bool closed) {
  if (vertices.size() < 2) throw DomainError("geodesic path needs two vertices");
  struct Edge {
    Vec2 p;
    double h, len;
  };
  std::vector<Edge> edges;
  const std::size_t n = vertices.size();
  const std::size_t ne = closed ? n : n - 1;
  for (std::size_t i = 0; i < ne; ++i) {
    const Vec2& p = vertices[i];
    const Vec2& q = vertices[(i + 1) % n];
    edges.push_back({p, base.heading(p, q), base.distance(p, q)});
  }
  auto locate = [edges](double t) {
    std::size_t i = t <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(t));
    if (i >= edges.size()) i = edges.size() - 1;
    return std::pair<std::size_t, double>(i, t - static_cast<double>(i));
  };
  BaseCurve c;
  c.t0 = 0.0;
  c.t1 = static_cast<double>(edges.size());
  c.pieces = static_cast<int>(edges.size());
  c.pos = [base, edges, locate](double t) {
    auto [i, s] = locate(t);
    return base.shoot(edges[i].p, edges[i].h, s * edges[i].len);
  };
  c.vel = [base, edges, locate](double t) {
    auto [i, s] = locate(t);
    double e = 0.0;
    const Vec2 q = base.shoot(edges[i].p, edges[i].h, s * edges[i].len, &e);
    return Vec2(edges[i].len / base.conformal(q) * dir(e));
  };
  return c;
}

// ---------------------------------------------------------------- Space

Space::Space(const SpaceParams& params)
    : params_(params), model_(params.model()), base_(params.kappa_e()) {
  params_.validate();
}

void Space::check(const Vec3& p) const {
  if (!std::isfinite(p.z())) throw DomainError("non-finite model point");
  base_.check(p.head<2>());
}

Vec3 Space::theta(const Vec2& p) const {
  const double t = params_.h_mean;
  switch (model_) {
    case Model::HalfPlane: {
      const double m2 = -params_.kappa_e();
      return {2.0 * t / (m2 * p.y()), 0.0, 1.0};
    }
    case Model::Heisenberg: return {-t * p.y(), t * p.x(), 1.0};
    case Model::Euclidean: break;
  }
  return {0.0, 0.0, 1.0};
}

Mat3 Space::metric(const Vec3& p) const {
  check(p);
  const double s = base_.conformal(p.head<2>());
  const Vec3 th = theta(p.head<2>());
  Mat3 g = th * th.transpose();
  g(0, 0) += s * s;
  g(1, 1) += s * s;
  return g;
}

std::array<Mat3, 3> Space::metric_derivatives(const Vec3& p) const {
  check(p);
  std::array<Mat3, 3> dg{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  const Vec3 th = theta(p.head<2>());
  std::array<double, 3> ds2{0.0, 0.0, 0.0};
  std::array<Vec3, 3> dth{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  const double t = params_.h_mean;
  if (model_ == Model::HalfPlane) {
    const double m2 = -params_.kappa_e();
    const double y = p.y();
    ds2[1] = -2.0 / (m2 * y * y * y);
    dth[1] = Vec3(-2.0 * t / (m2 * y * y), 0.0, 0.0);
  } else if (model_ == Model::Heisenberg) {
    dth[0] = Vec3(0.0, t, 0.0);
    dth[1] = Vec3(-t, 0.0, 0.0);
  }
  for (int l = 0; l < 3; ++l) {
    dg[l] = dth[l] * th.transpose() + th * dth[l].transpose();
    dg[l](0, 0) += ds2[l];
    dg[l](1, 1) += ds2[l];
  }
  return dg;
}

std::array<Mat3, 3> Space::christoffels(const Vec3& p) const {
  const Mat3 gi = metric(p).inverse();
  const auto dg = metric_derivatives(p);
  std::array<Mat3, 3> gam{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l) s += gi(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gam[k](i, j) = 0.5 * s;
      }
  return gam;
}

double Space::lift_step(const Vec2& p, const Vec2& q) const {
  if (p == q) return 0.0;
  const double t = params_.h_mean;
  if (t == 0.0) return 0.0;
  if (model_ == Model::HalfPlane) {
    const double m2 = -params_.kappa_e();
    const double dth = wrap_angle(base_.arrival_heading(p, q) - base_.heading(p, q));
    return 2.0 * t / m2 * dth;
  }
  return -t * (p.x() * q.y() - p.y() * q.x());
}

Vec3 Space::lift_along(const Vec3& start, const Vec2& q, double t) const {
  const Vec2 p = start.head<2>();
  const Vec2 x = base_.along(p, q, t);
  return {x.x(), x.y(), start.z() + lift_step(p, x)};
}

Vec3 Space::horizontal_ray(const Vec3& start, double h, double s) const {
  const Vec2 p = start.head<2>();
  const Vec2 x = base_.shoot(p, h, s);
  return {x.x(), x.y(), start.z() + lift_step(p, x)};
}

Vec3 Space::horizontal_vector(const Vec3& p, double h) const {
  const Vec2 v = dir(h) / base_.conformal(p.head<2>());
  const Vec3 th = theta(p.head<2>());
  return {v.x(), v.y(), -(th.x() * v.x() + th.y() * v.y())};
}

double Space::umbrella_height(const Vec3& c, const Vec2& q) const {
  return c.z() + lift_step(c.head<2>(), q);
}

double Space::inner(const Vec3& p, const Vec3& a, const Vec3& b) const { return a.dot(metric(p) * b); }

double Space::norm(const Vec3& p, const Vec3& v) const { return std::sqrt(inner(p, v, v)); }

Mat3 metric_at(const Space& space, const Vec3& p) { return space.metric(p); }

std::array<Mat3, 3> christoffels(const Space& space, const Vec3& p) { return space.christoffels(p); }

// ---------------------------------------------------------------- geodesics and lifts

namespace {

using State = Eigen::Matrix<double, 6, 1>;

State geodesic_rhs(const Space& space, const State& s, double param) {
  const Vec3 x = s.head<3>();
  const Vec3 v = s.tail<3>();
  if (!space.base().contains(x.head<2>()))
    throw DomainError("geodesic left the model domain at arc length " + std::to_string(param));
  const auto gam = space.christoffels(x);
  State d;
  d.head<3>() = v;
  for (int k = 0; k < 3; ++k) d[3 + k] = -v.dot(gam[k] * v);
  return d;
}

State rk4(const Space& space, State s, double t, double h, int n) {
  for (int i = 0; i < n; ++i) {
    const State k1 = geodesic_rhs(space, s, t);
    const State k2 = geodesic_rhs(space, s + 0.5 * h * k1, t + 0.5 * h);
    const State k3 = geodesic_rhs(space, s + 0.5 * h * k2, t + 0.5 * h);
    const State k4 = geodesic_rhs(space, s + h * k3, t + h);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return s;
}

constexpr double kHalvingTol = 1e-9;
constexpr int kMaxHalvings = 14;

}  // namespace

CurveSample geodesic(const Space& space, const Vec3& p, const Vec3& v, double length, int steps) {
  if (steps < 2) throw DomainError("geodesic needs at least two steps");
  if (!(length >= 0.0)) throw DomainError("geodesic length must be nonnegative");
  space.check(p);
  const double speed = space.norm(p, v);
  if (!(speed > 0.0)) throw DomainError("geodesic initial velocity must be nonzero");
  State s0;
  s0.head<3>() = p;
  s0.tail<3>() = v / speed;
  const double ds = length / steps;

  std::vector<State> samples;
  int sub = 1;
  for (int level = 0;; ++level) {
    std::vector<State> trial{s0};
    State s = s0;
    for (int i = 0; i < steps; ++i) {
      s = rk4(space, s, i * ds, ds / sub, sub);
      trial.push_back(s);
    }
    const bool done = !samples.empty() && (trial.back() - samples.back()).norm() < kHalvingTol;
    samples = std::move(trial);
    if (done) break;
    if (level == kMaxHalvings) throw NumericalError("geodesic step halving did not converge");
    sub *= 2;
  }
  CurveSample out;
  for (int i = 0; i <= steps; ++i) {
    out.params.push_back(i * ds);
    out.points.push_back(samples[i].head<3>());
    out.tangent.push_back(samples[i].tail<3>());
    out.curvature.push_back(0.0);
  }
  return out;
}

namespace {

// Integrates (dz, ds) over [a, b] with n three-point Gauss panels (no endpoint evaluations,
// so kinks at panel ends are harmless).
Eigen::Vector2d lift_panel(const Space& space, const BaseCurve& c, double a, double b, int n) {
  auto f = [&](double t) {
    const Vec2 x = c.pos(t);
    space.base().check(x);
    const Vec2 v = c.vel(t);
    const Vec3 th = space.theta(x);
    return Eigen::Vector2d(-(th.x() * v.x() + th.y() * v.y()), v.norm() * space.base().conformal(x));
  };
  static const double r = std::sqrt(0.6);
  const double h = (b - a) / n;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const double mid = a + (i + 0.5) * h;
    acc += h / 18.0 * (5.0 * f(mid - 0.5 * h * r) + 8.0 * f(mid) + 5.0 * f(mid + 0.5 * h * r));
  }
  return acc;
}

std::vector<Eigen::Vector2d> lift_increments(const Space& space, const BaseCurve& c, int samples) {
  const double dt = (c.t1 - c.t0) / samples;
  std::vector<Eigen::Vector2d> prev;
  int sub = 2;
  for (int level = 0;; ++level) {
    std::vector<Eigen::Vector2d> cur;
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    for (int i = 0; i < samples; ++i) {
      cur.push_back(lift_panel(space, c, c.t0 + i * dt, c.t0 + (i + 1) * dt, sub));
      total += cur.back();
    }
    if (!prev.empty()) {
      Eigen::Vector2d ptotal = Eigen::Vector2d::Zero();
      for (const auto& v : prev) ptotal += v;
      if ((total - ptotal).cwiseAbs().maxCoeff() < kHalvingTol) return cur;
    }
    if (level == kMaxHalvings) throw NumericalError("lift step halving did not converge");
    prev = std::move(cur);
    sub *= 2;
  }
}

}  // namespace

CurveSample horizontal_lift(const Space& space, const BaseCurve& curve, double start_height, int samples) {
  if (samples < 1) throw DomainError("lift needs at least one sample interval");
  const int pieces = std::max(curve.pieces, 1);
  samples = (samples + pieces - 1) / pieces * pieces;
  const auto inc = lift_increments(space, curve, samples);
  CurveSample out;
  double z = start_height, s = 0.0;
  const double dt = (curve.t1 - curve.t0) / samples;
  for (int i = 0; i <= samples; ++i) {
    const double t = curve.t0 + i * dt;
    const Vec2 x = curve.pos(t);
    const Vec2 v = curve.vel(t);
    const Vec3 th = space.theta(x);
    Vec3 p(x.x(), x.y(), z);
    Vec3 tan(v.x(), v.y(), -(th.x() * v.x() + th.y() * v.y()));
    const double nrm = space.norm(p, tan);
    out.params.push_back(s);
    out.points.push_back(p);
    out.tangent.push_back(nrm > 0.0 ? Vec3(tan / nrm) : tan);
    if (i < samples) {
      z += inc[i][0];
      s += inc[i][1];
    }
  }
  return out;
}

double lift_rise(const Space& space, const BaseCurve& curve) {
  const auto inc = lift_increments(space, curve, 16 * std::max(curve.pieces, 1));
  double z = 0.0;
  for (const auto& v : inc) z += v[0];
  return z;
}

// ---------------------------------------------------------------- polygons

double oriented_area_numeric(const Base& base, const std::vector<Vec2>& vertices) {
  const std::size_t n = vertices.size();
  double ccw = 0.0;
  if (!base.hyperbolic()) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& p = vertices[i];
      const Vec2& q = vertices[(i + 1) % n];
      ccw += 0.5 * (p.x() * q.y() - q.x() * p.y());
    }
    return -ccw;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = vertices[i];
    const Vec2& q = vertices[(i + 1) % n];
    const double h = base.heading(p, q);
    const double len = base.distance(p, q);
    // dx / (m^2 y) along the unit-speed side; dx/ds = m y cos(heading)
    auto f = [&](double s) {
      double e = 0.0;
      base.shoot(p, h, s, &e);
      return std::cos(e) / base.m();
    };
    ccw += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, len, 15, 1e-13);
  }
  return -ccw;
}

BasePolygon make_polygon(const Base& base, const std::vector<Vec2>& vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw DomainError("polygon needs three vertices");
  for (const auto& v : vertices) base.check(v);
  BasePolygon poly;
  poly.vertices = vertices;
  poly.kappa_base = base.curvature();
  for (std::size_t i = 0; i < n; ++i) {
    const double len = base.distance(vertices[i], vertices[(i + 1) % n]);
    if (!(len > 0.0)) throw DomainError("degenerate polygon side");
    poly.side_lengths.push_back(len);
  }
  const double numeric = oriented_area_numeric(base, vertices);
  const double sign = numeric >= 0.0 ? 1.0 : -1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& v = vertices[i];
    const double hn = base.heading(v, vertices[(i + 1) % n]);
    const double hp = base.heading(v, vertices[(i + n - 1) % n]);
    const double a = sign > 0.0 ? positive_angle(hn - hp) : positive_angle(hp - hn);
    poly.interior_angles.push_back(a);
    sum += a;
  }
  if (base.hyperbolic())
    poly.oriented_area = sign * ((static_cast<double>(n) - 2.0) * kPi - sum) / (base.m() * base.m());
  else
    poly.oriented_area = numeric;
  return poly;
}

BasePolygon base_polygon_from_hinge(double kappa_base, const std::vector<double>& lengths,
                                    const std::vector<double>& angles) {
  const Base base(kappa_base);
  for (double a : angles)
    if (!(a > 0.0 && a < kPi)) throw DomainError("hinge angles must lie in (0, pi)");
  for (double l : lengths)
    if (!(l > 0.0)) throw DomainError("hinge lengths must be positive");

  if (lengths.empty() && angles.size() == 3) {
    if (!base.hyperbolic()) throw DomainError("angles alone do not determine a flat triangle");
    const double A = angles[0], B = angles[1], C = angles[2];
    if (A + B + C >= kPi) throw DomainError("hyperbolic triangle needs angle sum < pi");
    const double c = std::acosh((std::cos(C) + std::cos(A) * std::cos(B)) / (std::sin(A) * std::sin(B))) / base.m();
    const double a = std::acosh((std::cos(A) + std::cos(B) * std::cos(C)) / (std::sin(B) * std::sin(C))) / base.m();
    return base_polygon_from_hinge(kappa_base, {c, a}, {B});
  }
  if (lengths.size() != angles.size() + 1 || lengths.size() < 2)
    throw DomainError("hinge needs n lengths and n-1 angles");

  std::vector<Vec2> v;
  const Vec2 o = base.origin();
  v.push_back(base.shoot(o, kPi, lengths[0]));
  v.push_back(o);
  double back = kPi;  // heading at the current vertex towards the previous one
  for (std::size_t i = 1; i < lengths.size(); ++i) {
    const double h = back + angles[i - 1];
    double e = 0.0;
    v.push_back(base.shoot(v.back(), h, lengths[i], &e));
    back = e + kPi;
  }
  return make_polygon(base, v);
}

// ---------------------------------------------------------------- curvature of patches

double mean_curvature(const Space& space, const PatchFn& f, double u, double v, double h) {
  const double w1[4] = {1.0, -8.0, 8.0, -1.0};
  const double o1[4] = {-2.0, -1.0, 1.0, 2.0};
  Vec3 fu = Vec3::Zero(), fv = Vec3::Zero(), fuu = Vec3::Zero(), fvv = Vec3::Zero(), fuv = Vec3::Zero();
  const Vec3 f0 = f(u, v);
  for (int i = 0; i < 4; ++i) {
    const Vec3 a = f(u + o1[i] * h, v);
    const Vec3 b = f(u, v + o1[i] * h);
    fu += w1[i] * a;
    fv += w1[i] * b;
    const double w2 = (i == 0 || i == 3) ? -1.0 : 16.0;
    fuu += w2 * a;
    fvv += w2 * b;
    for (int j = 0; j < 4; ++j) fuv += w1[i] * w1[j] * f(u + o1[i] * h, v + o1[j] * h);
  }
  fu /= 12.0 * h;
  fv /= 12.0 * h;
  fuu = (fuu - 30.0 * f0) / (12.0 * h * h);
  fvv = (fvv - 30.0 * f0) / (12.0 * h * h);
  fuv /= 144.0 * h * h;

  const Mat3 g = space.metric(f0);
  const auto gam = space.christoffels(f0);
  const Vec3 w = fu.cross(fv);
  Vec3 n = g.inverse() * w;
  const double nn = std::sqrt(n.dot(g * n));
  const double E = fu.dot(g * fu), F = fu.dot(g * fv), G = fv.dot(g * fv);
  const double det = E * G - F * F;
  if (!(nn > 0.0) || !(det > 1e-20 * (E * G + 1e-300))) throw DomainError("degenerate immersion");
  n /= nn;
  auto second = [&](const Vec3& d2, const Vec3& a, const Vec3& b) {
    Vec3 acc = d2;
    for (int k = 0; k < 3; ++k) acc[k] += a.dot(gam[k] * b);
    return acc.dot(g * n);
  };
  const double L = second(fuu, fu, fu), M = second(fuv, fu, fv), N = second(fvv, fv, fv);
  return 0.5 * (G * L - 2.0 * F * M + E * N) / det;
}

// ---------------------------------------------------------------- isometries

namespace {

const Mat2 kFlip = (Mat2() << -1.0, 0.0, 0.0, 1.0).finished();

Mat2 rot2(double a) { return (Mat2() << std::cos(a), -std::sin(a), std::sin(a), std::cos(a)).finished(); }

Mat2 moebius_conj(const Mat2& m) { return (Mat2() << m(0, 0), -m(0, 1), -m(1, 0), m(1, 1)).finished(); }

}  // namespace

BaseIsometry BaseIsometry::identity(const Base& base) {
  BaseIsometry t;
  t.hyperbolic_ = base.hyperbolic();
  return t;
}

BaseIsometry BaseIsometry::moving(const Base& base, const Vec2& p, double hp, const Vec2& q, double hq) {
  BaseIsometry t;
  t.hyperbolic_ = base.hyperbolic();
  const double phi = hq - hp;
  if (t.hyperbolic_) {
    base.check(p);
    base.check(q);
    const Mat2 to_i = (Mat2() << 1.0, -p.x(), 0.0, p.y()).finished();
    const Mat2 from_i = (Mat2() << q.y(), q.x(), 0.0, 1.0).finished();
    const double c = std::cos(phi / 2.0), s = std::sin(phi / 2.0);
    const Mat2 r = (Mat2() << c, s, -s, c).finished();
    t.a_ = from_i * r * to_i;
  } else {
    t.a_ = rot2(phi);
    t.b_ = q - t.a_ * p;
  }
  return t;
}

BaseIsometry BaseIsometry::rotation(const Base& base, const Vec2& c, double angle) {
  return moving(base, c, 0.0, c, angle);
}

BaseIsometry BaseIsometry::reflection(const Base& base, const Vec2& p, double h) {
  const BaseIsometry m = moving(base, base.origin(), kPi / 2.0, p, h);
  BaseIsometry f = identity(base);
  f.flip_ = true;
  return m.compose(f).compose(m.inverse());
}

Vec2 BaseIsometry::operator()(const Vec2& p) const {
  Vec2 x = flip_ ? Vec2(-p.x(), p.y()) : p;
  if (!hyperbolic_) return a_ * x + b_;
  const std::complex<double> w(x.x(), x.y());
  const std::complex<double> r = (a_(0, 0) * w + a_(0, 1)) / (a_(1, 0) * w + a_(1, 1));
  return {r.real(), r.imag()};
}

BaseIsometry BaseIsometry::compose(const BaseIsometry& in) const {
  BaseIsometry t;
  t.hyperbolic_ = hyperbolic_;
  t.flip_ = flip_ != in.flip_;
  if (hyperbolic_) {
    t.a_ = a_ * (flip_ ? moebius_conj(in.a_) : in.a_);
  } else {
    const Mat2 la = flip_ ? Mat2(kFlip * in.a_ * kFlip) : in.a_;
    const Vec2 lb = flip_ ? Vec2(kFlip * in.b_) : in.b_;
    t.a_ = a_ * la;
    t.b_ = a_ * lb + b_;
  }
  return t;
}

BaseIsometry BaseIsometry::inverse() const {
  BaseIsometry t;
  t.hyperbolic_ = hyperbolic_;
  t.flip_ = flip_;
  const Mat2 ai = a_.inverse();
  if (hyperbolic_) {
    t.a_ = flip_ ? moebius_conj(ai) : ai;
  } else {
    const Vec2 bi = -ai * b_;
    t.a_ = flip_ ? Mat2(kFlip * ai * kFlip) : ai;
    t.b_ = flip_ ? Vec2(kFlip * bi) : bi;
  }
  return t;
}

Isometry Isometry::identity(const Space& space) {
  Isometry r;
  r.space_ = space;
  return r;
}

Isometry Isometry::vertical_translation(const Space& space, double c) {
  Isometry r = identity(space);
  r.pieces_.push_back({BaseIsometry::identity(space.base()), 1, space.base().origin(), c, false});
  return r;
}

Isometry Isometry::moving(const Space& space, const Vec3& p, double hp, const Vec3& q, double hq) {
  Isometry r = identity(space);
  const Vec2 pb = p.head<2>(), qb = q.head<2>();
  r.pieces_.push_back({BaseIsometry::moving(space.base(), pb, hp, qb, hq), 1, pb, q.z() - p.z(), false});
  return r;
}

Isometry Isometry::rotation_about_fiber(const Space& space, const Vec2& c, double angle) {
  Isometry r = identity(space);
  r.pieces_.push_back({BaseIsometry::rotation(space.base(), c, angle), 1, c, 0.0, false});
  return r;
}

Isometry Isometry::half_turn(const Space& space, const Vec3& a, double h) {
  Isometry r = identity(space);
  const Vec2 ab = a.head<2>();
  r.pieces_.push_back({BaseIsometry::reflection(space.base(), ab, h), -1, ab, 2.0 * a.z(), false});
  return r;
}

Vec3 Isometry::apply(const Piece& pc, const Vec3& p) const {
  const Vec2 x = p.head<2>();
  const Vec2 tref = pc.t(pc.ref);
  if (!pc.inverted) {
    const Vec2 tx = pc.t(x);
    const double f = pc.f_ref + space_.lift_step(tref, tx) - pc.s * space_.lift_step(pc.ref, x);
    return {tx.x(), tx.y(), pc.s * p.z() + f};
  }
  const Vec2 y = pc.t.inverse()(x);
  const double f = pc.f_ref + space_.lift_step(tref, x) - pc.s * space_.lift_step(pc.ref, y);
  return {y.x(), y.y(), pc.s * (p.z() - f)};
}

Vec3 Isometry::operator()(const Vec3& p) const {
  Vec3 x = p;
  for (const auto& pc : pieces_) x = apply(pc, x);
  return x;
}

Isometry Isometry::compose(const Isometry& in) const {
  Isometry r = identity(space_);
  r.pieces_ = in.pieces_;
  r.pieces_.insert(r.pieces_.end(), pieces_.begin(), pieces_.end());
  return r;
}

Isometry Isometry::inverse() const {
  Isometry r = identity(space_);
  for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) {
    Piece pc = *it;
    pc.inverted = !pc.inverted;
    r.pieces_.push_back(pc);
  }
  return r;
}

Vec2 Isometry::base_map(const Vec2& p) const {
  Vec2 x = p;
  for (const auto& pc : pieces_) x = pc.inverted ? pc.t.inverse()(x) : pc.t(x);
  return x;
}

int Isometry::fiber_sign() const {
  int s = 1;
  for (const auto& pc : pieces_) s *= pc.s;
  return s;
}

}  // namespace noids
