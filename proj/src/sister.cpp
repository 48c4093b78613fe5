#include "noids/sister.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace noids {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Gradient of samples on a grid, central inside and one-sided at the ends.
std::vector<double> derivative(const std::vector<double>& s, const std::vector<double>& f) {
  const std::size_t n = s.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d[0] = (f[1] - f[0]) / (s[1] - s[0]);
  d[n - 1] = (f[n - 1] - f[n - 2]) / (s[n - 1] - s[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (s[i + 1] - s[i - 1]);
  return d;
}

// PL height of the graph at a base point, searched over the given triangles.
struct Locator {
  const DiscreteGraph& g;
  const Base& base;
  std::vector<int> tris;

  double operator()(const Vec2& p) const {
    const Vec2 k = to_chart(base, p);
    double best = -std::numeric_limits<double>::infinity(), value = 0.0;
    for (int t : tris) {
      const auto& tri = g.mesh.tris[t];
      const Vec2 a = g.mesh.chart[tri[0]], b = g.mesh.chart[tri[1]], c = g.mesh.chart[tri[2]];
      const double area = cross(b - a, c - a);
      const double l0 = cross(b - k, c - k) / area, l1 = cross(c - k, a - k) / area;
      const double l2 = 1.0 - l0 - l1;
      const double inside = std::min({l0, l1, l2});
      if (inside > best) {
        best = inside;
        value = l0 * g.z[tri[0]] + l1 * g.z[tri[1]] + l2 * g.z[tri[2]];
      }
      if (inside >= 0.0) return value;
    }
    if (best < -1e-9) throw DomainError("point outside the mesh");
    return value;
  }
};

double mod2pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  return a < 0.0 ? a + 2.0 * M_PI : a;
}

// Closest parameters of two segments and their distance.
double segment_distance(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1, double& a,
                        double& b) {
  const Vec2 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double denom = cross(d1, d2);
  if (std::abs(denom) > 1e-300) {
    a = cross(q0 - p0, d2) / denom;
    b = cross(q0 - p0, d1) / denom;
    if (a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0) return 0.0;
  }
  auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double s, double t) {
    const double dist = (p0 + s * d1 - q0 - t * d2).norm();
    if (dist < best) {
      best = dist;
      a = s;
      b = t;
    }
  };
  const double l1 = d1.squaredNorm(), l2 = d2.squaredNorm();
  consider(0.0, l2 > 0.0 ? clamp01(r.dot(d2) / l2) : 0.0);
  consider(1.0, l2 > 0.0 ? clamp01((p1 - q0).dot(d2) / l2) : 0.0);
  consider(l1 > 0.0 ? clamp01((q0 - p0).dot(d1) / l1) : 0.0, 0.0);
  consider(l1 > 0.0 ? clamp01((q1 - p0).dot(d1) / l1) : 0.0, 1.0);
  return best;
}

// Trapezoid integral of samples f over [t0, t1] on the grid s.
double integrate(const std::vector<double>& s, const std::vector<double>& f, double t0, double t1) {
  auto value = [&](double t) {
    const std::size_t i = std::clamp<std::size_t>(
        std::upper_bound(s.begin(), s.end(), t) - s.begin(), 1, s.size() - 1);
    const double w = (t - s[i - 1]) / (s[i] - s[i - 1]);
    return (1.0 - w) * f[i - 1] + w * f[i];
  };
  double acc = 0.0, prev_t = t0, prev_f = value(t0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] <= t0) continue;
    if (s[i] >= t1) break;
    acc += 0.5 * (s[i] - prev_t) * (f[i] + prev_f);
    prev_t = s[i];
    prev_f = f[i];
  }
  return acc + 0.5 * (t1 - prev_t) * (value(t1) + prev_f);
}

}  // namespace

SisterRelations sister_curvature(double H, double k, double t) { return {H, -t + H, k}; }

double TwistProfile::min_rate() const {
  return rate.empty() ? 0.0 : *std::min_element(rate.begin(), rate.end());
}

TwistProfile twist_along_vertical(const DiscreteGraph& g, const BoundaryData& bd, int corner,
                                  const TwistOptions& opts) {
  const int n = static_cast<int>(bd.size());
  if (corner < 0 || corner >= n || !bd.jump[corner]) throw DomainError("corner is not a vertical arc");
  if (opts.samples < 3 || opts.circle < 16) throw DomainError("too few twist samples");
  const Base base(g.space.kappa_e());
  const Vec2 P = bd.polygon[corner];
  const Vec2 next = bd.polygon[(corner + 1) % n], prev = bd.polygon[(corner + n - 1) % n];
  const double h_next = base.heading(P, next), h_prev = base.heading(P, prev);

  std::vector<int> fan;
  for (std::size_t t = 0; t < g.mesh.size(); ++t)
    for (int d : g.mesh.tris[t])
      if (g.mesh.corner[d] == corner) fan.push_back(static_cast<int>(t));
  if (fan.empty()) throw DomainError("corner has no triangles");
  for (int t : fan) {
    const auto& tri = g.mesh.tris[t];
    const Vec2 a = g.mesh.chart[tri[0]], b = g.mesh.chart[tri[1]], c = g.mesh.chart[tri[2]];
    if (!(cross(b - a, c - a) > 0.0)) throw NumericalError("degenerate triangle at the vertical arc");
  }

  // interior sector, swept clockwise from the start side
  const auto& t0 = g.mesh.tris[fan.front()];
  const Vec2 centroid = (g.mesh.pos[t0[0]] + g.mesh.pos[t0[1]] + g.mesh.pos[t0[2]]) / 3.0;
  const double hc = base.heading(P, centroid);
  TwistProfile tp;
  tp.corner = corner;
  tp.base_point = P;
  tp.H = g.space.h_mean;
  double h_start, h_end;
  if (mod2pi(h_prev - hc) < mod2pi(h_prev - h_next)) {
    h_start = h_prev;
    h_end = h_next;
    tp.u_start = bd.end_height[(corner + n - 1) % n];
    tp.u_end = bd.start_height[corner];
  } else {
    h_start = h_next;
    h_end = h_prev;
    tp.u_start = bd.start_height[corner];
    tp.u_end = bd.end_height[(corner + n - 1) % n];
  }
  tp.opening = mod2pi(h_start - h_end);

  double radius = opts.radius;
  if (radius <= 0.0) {
    radius = 8.0 * max_edge_length(base, g.mesh);
    radius = std::min({radius, 0.4 * base.distance(P, next), 0.4 * base.distance(P, prev)});
    // other sides, sampled
    for (int i = 0; i < n; ++i) {
      if (i == corner || (i + 1) % n == corner) continue;
      const Vec2 a = bd.polygon[i], b = bd.polygon[(i + 1) % n];
      const double len = base.distance(a, b), h = base.heading(a, b);
      for (int j = 0; j <= 64; ++j) radius = std::min(radius, 0.4 * base.distance(P, base.shoot(a, h, len * j / 64.0)));
    }
  }
  tp.radius = radius;

  Locator locate{g, base, {}};
  for (std::size_t t = 0; t < g.mesh.size(); ++t)
    for (int d : g.mesh.tris[t])
      if (base.distance(P, g.mesh.pos[d]) < 3.0 * radius + max_edge_length(base, g.mesh)) {
        locate.tris.push_back(static_cast<int>(t));
        break;
      }

  // normalised height progress around the circle
  const int m = opts.circle;
  std::vector<double> lambda(m + 1), w(m + 1);
  for (int i = 0; i <= m; ++i) {
    lambda[i] = static_cast<double>(i) / m;
    w[i] = locate(base.shoot(P, h_start - lambda[i] * tp.opening, radius));
  }
  const double w0 = w.front(), w1 = w.back();
  if (!(std::abs(w1 - w0) > 0.0)) throw NumericalError("no height change around the vertical arc");
  for (double& x : w) x = (x - w0) / (w1 - w0);
  tp.monotone = true;
  for (int i = 0; i < m; ++i)
    if (!(w[i + 1] > w[i])) tp.monotone = false;

  const double L = std::abs(tp.u_end - tp.u_start);
  for (int j = 0; j < opts.samples; ++j) {
    const double f = static_cast<double>(j) / (opts.samples - 1);
    // first crossing of the level f
    double lam = 1.0;
    if (f <= 0.0) lam = 0.0;
    else
      for (int i = 0; i < m; ++i)
        if (w[i + 1] >= f) {
          const double span = w[i + 1] - w[i];
          lam = lambda[i] + (span > 0.0 ? (f - w[i]) / span : 0.0) * (lambda[i + 1] - lambda[i]);
          break;
        }
    tp.s.push_back(f * L);
    tp.alpha.push_back(lam * tp.opening);
  }
  tp.rate = derivative(tp.s, tp.alpha);
  for (double r : tp.rate) tp.torsion.push_back(r - tp.H);
  return tp;
}

std::vector<TwistProfile> contour_twists(const DiscreteGraph& g, const BoundaryData& bd,
                                         const TwistOptions& opts) {
  std::vector<TwistProfile> out;
  for (std::size_t i = 0; i < bd.size(); ++i)
    if (bd.jump[i] && std::abs(bd.jump_size(i)) > 0.0) out.push_back(twist_along_vertical(g, bd, static_cast<int>(i), opts));
  return out;
}

AngleProfile level_angle_profile(const TwistProfile& twist) {
  if (twist.s.size() < 2) throw DomainError("twist profile has no samples");
  const bool from_start = std::abs(twist.u_start) <= std::abs(twist.u_end);
  const double zero = from_start ? twist.u_start : twist.u_end;
  if (std::abs(zero) > 1e-9 * (1.0 + std::abs(twist.u_end - twist.u_start)))
    throw DomainError("vertical arc does not end at height 0");
  return [twist, from_start](double h) {
    const double L = twist.length();
    double x = std::abs(h);
    if (x > L) return std::numeric_limits<double>::quiet_NaN();
    if (!from_start) x = L - x;
    const auto it = std::upper_bound(twist.s.begin(), twist.s.end(), x);
    const std::size_t j = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - twist.s.begin(), 1), twist.s.size() - 1);
    const double t = (x - twist.s[j - 1]) / (twist.s[j] - twist.s[j - 1]);
    const double a = twist.alpha[j - 1] + t * (twist.alpha[j] - twist.alpha[j - 1]);
    return from_start ? a : twist.opening - a;
  };
}

TwistProfile twist_from_rate(double H, double length, const std::function<double(double)>& rate,
                             int samples) {
  if (!(length > 0.0) || samples < 2) throw DomainError("twist profile needs a positive length");
  TwistProfile tp;
  tp.H = H;
  tp.u_end = length;
  tp.monotone = true;
  double acc = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double s = length * j / (samples - 1);
    if (j > 0) {
      // Simpson on each interval
      const double a = tp.s.back();
      acc += (s - a) / 6.0 * (rate(a) + 4.0 * rate(0.5 * (a + s)) + rate(s));
    }
    tp.s.push_back(s);
    tp.alpha.push_back(acc);
    tp.rate.push_back(rate(s));
    tp.torsion.push_back(rate(s) - H);
  }
  tp.opening = acc;
  return tp;
}

CurveSample mirror_curve(double kappa, double H, const TwistProfile& twist, int substeps) {
  if (twist.s.size() < 2 || !(twist.length() > 0.0)) throw DomainError("twist profile has no length");
  const Base base(kappa);
  const double m = base.m();
  const bool hyp = base.hyperbolic();
  const auto& s = twist.s;
  auto k_tilde = [&](double t) {
    const std::size_t i = std::clamp<std::size_t>(
        std::upper_bound(s.begin(), s.end(), t) - s.begin(), 1, s.size() - 1);
    const double w = std::clamp((t - s[i - 1]) / (s[i] - s[i - 1]), 0.0, 1.0);
    return 2.0 * H - ((1.0 - w) * twist.rate[i - 1] + w * twist.rate[i]);
  };
  using State = std::array<double, 3>;  // x, y, chart heading
  auto rhs = [&](const State& q, State& dq, double t) {
    const double inv = hyp ? m * q[1] : 1.0;
    dq[0] = std::cos(q[2]) * inv;
    dq[1] = std::sin(q[2]) * inv;
    dq[2] = k_tilde(t) - (hyp ? m * std::cos(q[2]) : 0.0);
  };
  auto stepper = boost::numeric::odeint::make_controlled(
      1e-13, 1e-13, boost::numeric::odeint::runge_kutta_dopri5<State>());
  const Vec2 o = base.origin();
  State q{o.x(), o.y(), 0.0};
  CurveSample cs;
  auto record = [&](double t) {
    const double inv = hyp ? m * q[1] : 1.0;
    cs.params.push_back(t);
    cs.points.emplace_back(q[0], q[1], 0.0);
    cs.tangent.emplace_back(std::cos(q[2]) * inv, std::sin(q[2]) * inv, 0.0);
    cs.curvature.push_back(k_tilde(t));
  };
  record(0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double a = s[i - 1], b = s[i], dt = (b - a) / std::max(substeps, 1);
    for (int j = 1; j <= std::max(substeps, 1); ++j) {
      const double t = j == std::max(substeps, 1) ? b : a + j * dt;
      boost::numeric::odeint::integrate_adaptive(stepper, rhs, q, cs.params.back(), t, dt);
      if (hyp && !(q[1] > 0.0)) throw NumericalError("mirror curve left the half-plane");
      record(t);
    }
  }
  return cs;
}

std::vector<SelfIntersection> self_intersections(const CurveSample& curve, double tol) {
  const std::size_t n = curve.size();
  std::vector<SelfIntersection> out;
  if (n < 4) return out;
  auto pt = [&](std::size_t i) { return Vec2(curve.points[i].x(), curve.points[i].y()); };
  // sweep over segments ordered by their left end
  std::vector<std::size_t> order(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) order[i] = i;
  auto lo = [&](std::size_t i) { return std::min(pt(i).x(), pt(i + 1).x()); };
  auto hi = [&](std::size_t i) { return std::max(pt(i).x(), pt(i + 1).x()); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lo(a) < lo(b); });
  std::vector<std::size_t> active;
  std::vector<std::pair<std::size_t, std::size_t>> hits;
  for (std::size_t seg : order) {
    const double left = lo(seg) - tol;
    active.erase(std::remove_if(active.begin(), active.end(), [&](std::size_t a) { return hi(a) < left; }),
                 active.end());
    for (std::size_t other : active) {
      const std::size_t i = std::min(seg, other), j = std::max(seg, other);
      if (j <= i + 1) continue;
      const double ylo = std::max(std::min(pt(i).y(), pt(i + 1).y()), std::min(pt(j).y(), pt(j + 1).y()));
      const double yhi = std::min(std::max(pt(i).y(), pt(i + 1).y()), std::max(pt(j).y(), pt(j + 1).y()));
      if (ylo > yhi + tol) continue;
      double a = 0.0, b = 0.0;
      if (segment_distance(pt(i), pt(i + 1), pt(j), pt(j + 1), a, b) <= tol) hits.emplace_back(i, j);
    }
    active.push_back(seg);
  }
  std::sort(hits.begin(), hits.end());
  for (auto [i, j] : hits) {
    // one report per meeting: neighbours of a kept pair touch the same point
    bool seen = false;
    for (const auto& h : out)
      if (std::abs(h.i - static_cast<int>(i)) <= 1 && std::abs(h.j - static_cast<int>(j)) <= 1) seen = true;
    if (seen) continue;
    double a = 0.0, b = 0.0;
    segment_distance(pt(i), pt(i + 1), pt(j), pt(j + 1), a, b);
    SelfIntersection si;
    si.i = static_cast<int>(i);
    si.j = static_cast<int>(j);
    si.t0 = curve.params[i] + a * (curve.params[i + 1] - curve.params[i]);
    si.t1 = curve.params[j] + b * (curve.params[j + 1] - curve.params[j]);
    si.point = pt(i) + a * (pt(i + 1) - pt(i));
    out.push_back(si);
  }
  return out;
}

LoopReport gauss_bonnet_loop_check(const CurveSample& curve, double kappa, double H, double tol) {
  if (kappa > 0.0) throw DomainError("base curvature must be <= 0");
  const Base base(kappa);
  const double m = base.m();
  LoopReport rep;
  const std::size_t n = curve.size();
  std::vector<double> green(n), heading(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = curve.points[i];
    const Vec3& v = curve.tangent[i];
    green[i] = base.hyperbolic() ? v.x() / (m * m * p.y()) : 0.5 * (p.x() * v.y() - p.y() * v.x());
    heading[i] = std::atan2(v.y(), v.x());
  }
  auto heading_at = [&](double t) {
    const std::size_t i = std::clamp<std::size_t>(
        std::upper_bound(curve.params.begin(), curve.params.end(), t) - curve.params.begin(), 1, n - 1);
    const double w = (t - curve.params[i - 1]) / (curve.params[i] - curve.params[i - 1]);
    return heading[i - 1] + w * wrap_angle(heading[i] - heading[i - 1]);
  };
  for (const auto& si : self_intersections(curve, tol)) {
    LoopAudit la;
    la.at = si;
    la.length = si.t1 - si.t0;
    const double signed_area = integrate(curve.params, green, si.t0, si.t1);
    la.orientation = signed_area >= 0.0 ? 1 : -1;
    la.area = std::abs(signed_area);
    la.total_curvature = integrate(curve.params, curve.curvature, si.t0, si.t1);
    la.corner_angle = la.orientation * wrap_angle(heading_at(si.t0) - heading_at(si.t1));
    la.residual = kappa * la.area + la.orientation * la.total_curvature + la.corner_angle - 2.0 * M_PI;
    la.measured_twist = 2.0 * H * la.length - la.total_curvature;
    la.forced_twist = 2.0 * H * la.length -
                      la.orientation * (2.0 * M_PI - la.corner_angle - kappa * la.area);
    la.exceeds_pi = la.forced_twist > M_PI;
    rep.loops.push_back(la);
  }
  rep.verdict = rep.loops.empty() ? LoopVerdict::EmbeddedConsistent : LoopVerdict::ContradictionFound;
  return rep;
}

SisterAudit sister_audit(const Solution& sol, const Contour& contour, const TwistOptions& opts) {
  SisterAudit audit;
  const BoundaryData bd = boundary_heights(contour);
  const double H = sol.graph.space.h_mean, kappa = sol.graph.space.kappa;
  audit.twists = contour_twists(sol.graph, bd, opts);
  audit.min_rate = std::numeric_limits<double>::infinity();
  audit.max_k_tilde = -std::numeric_limits<double>::infinity();
  audit.ok = !audit.twists.empty();
  for (const auto& tp : audit.twists) {
    audit.mirrors.push_back(mirror_curve(kappa, H, tp));
    audit.loops.push_back(gauss_bonnet_loop_check(audit.mirrors.back(), kappa, H));
    audit.min_rate = std::min(audit.min_rate, tp.min_rate());
    for (double k : audit.mirrors.back().curvature) audit.max_k_tilde = std::max(audit.max_k_tilde, k);
    if (!tp.monotone || !(tp.min_rate() > 0.0) || !audit.loops.back().loops.empty()) audit.ok = false;
  }
  if (!(audit.max_k_tilde < 2.0 * H)) audit.ok = false;
  return audit;
}

}  // namespace noids
