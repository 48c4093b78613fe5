#include "noids/contours.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace noids {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kArcSamples = 64;
constexpr int kVerticalSamples = 16;

Arc horizontal_arc(const Space& sp, const Vec3& start, const Vec2& to, const std::string& label) {
  Arc arc;
  arc.type = ArcType::Horizontal;
  arc.label = label;
  arc.samples = horizontal_lift(sp, geodesic_path(sp.base(), {start.head<2>(), to}, false), start.z(), kArcSamples);
  arc.start = arc.samples.points.front();
  arc.end = arc.samples.points.back();
  return arc;
}

Arc vertical_arc(const Vec3& start, double end_height, const std::string& label) {
  Arc arc;
  arc.type = ArcType::Vertical;
  arc.label = label;
  arc.start = start;
  arc.end = Vec3(start.x(), start.y(), end_height);
  const double len = end_height - start.z();
  const Vec3 t(0.0, 0.0, len >= 0.0 ? 1.0 : -1.0);
  for (int i = 0; i <= kVerticalSamples; ++i) {
    const double f = static_cast<double>(i) / kVerticalSamples;
    arc.samples.params.push_back(f * std::abs(len));
    arc.samples.points.push_back(Vec3(start.x(), start.y(), start.z() + f * len));
    arc.samples.tangent.push_back(t);
  }
  return arc;
}

double rise(const Space& sp, const Vec2& p, const Vec2& q) {
  return lift_rise(sp, geodesic_path(sp.base(), {p, q}, false));
}

Vec3 outgoing(const Arc& a) { return a.samples.tangent.front(); }
Vec3 incoming(const Arc& a) { return a.samples.tangent.back(); }

const char* family_name(Family f) { return f == Family::Knoid ? "knoid" : "noid2k"; }

}  // namespace

double NoidSpec::phi() const { return kPi / k; }

void NoidSpec::validate() const {
  space.validate();
  if (k < 2) throw DomainError("k must be at least 2");
  if (!(truncation > 0.0)) throw DomainError("truncation must be positive");
  if (family == Family::Knoid) {
    if (!(a > 0.0)) throw DomainError("hinge length a must be positive");
  } else {
    if (!(d > 0.0)) throw DomainError("diagonal length d must be positive");
    if (!(alpha > 0.0 && alpha <= phi() / 2 + 1e-15)) throw DomainError("alpha must lie in (0, pi/(2k)]");
  }
}

const Arc& Contour::arc(const std::string& label) const {
  for (const auto& a : arcs)
    if (a.label == label) return a;
  throw DomainError("no contour vertex labelled " + label);
}

Vec3 Contour::vertex(const std::string& label) const { return arc(label).start; }

double Contour::closure_error() const {
  if (arcs.empty()) return 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < arcs.size(); ++i) err = std::max(err, (arcs[i].end - arcs[i + 1].start).norm());
  if (closed) err = std::max(err, (arcs.back().end - arcs.front().start).norm());
  return err;
}

BasePolygon knoid_triangle(const NoidSpec& spec) {
  NoidSpec s = spec;
  s.family = Family::Knoid;
  s.validate();
  return base_polygon_from_hinge(s.space.kappa_e(), {s.a, s.truncation}, {s.phi()});
}

Contour knoid_contour(const NoidSpec& spec) {
  const BasePolygon tri = knoid_triangle(spec);
  const Space sp(spec.space);
  const Vec2 pa = tri.vertices[0], o = tri.vertices[1], pr = tri.vertices[2];
  const double s = spec.truncation * spec.truncation;
  Contour c;
  c.family = Family::Knoid;
  c.space = spec.space;
  c.base = tri;
  c.arcs.push_back(horizontal_arc(sp, Vec3(o.x(), o.y(), 0.0), pa, "O"));
  c.arcs.push_back(vertical_arc(c.arcs.back().end, c.arcs.back().end.z() + s, "P_a"));
  c.arcs.push_back(horizontal_arc(sp, c.arcs.back().end, pr, "P_a+"));
  // the last edge must arrive at O at height 0
  const double z_close = -rise(sp, pr, o);
  c.arcs.push_back(vertical_arc(c.arcs.back().end, z_close, "P_r"));
  c.arcs.push_back(horizontal_arc(sp, c.arcs.back().end, o, "P_r-"));
  return c;
}

double knoid_gap(const Contour& c) {
  const Arc& v = c.arc("P_r");
  return v.start.z() - v.end.z();
}

BasePolygon noid2k_quad(const NoidSpec& spec) {
  NoidSpec s = spec;
  s.family = Family::Noid2k;
  s.validate();
  const Base base(s.space.kappa_e());
  const Vec2 p1 = base.origin();
  const double n = s.truncation;
  const Vec2 ea = base.shoot(p1, 0.0, n);
  const Vec2 ph = base.shoot(p1, -s.alpha, s.d);
  const Vec2 eb = base.shoot(p1, -s.phi(), n);
  return make_polygon(base, {p1, ea, ph, eb});
}

bool is_convex(const BasePolygon& poly) {
  return std::all_of(poly.interior_angles.begin(), poly.interior_angles.end(),
                     [](double a) { return a < kPi; });
}

Contour noid2k_contour(const NoidSpec& spec, double c4, double c5) {
  if (!(c4 >= 0.0 && c5 >= 0.0)) throw DomainError("retranslation constants must be non-negative");
  const BasePolygon quad = noid2k_quad(spec);
  const Space sp(spec.space);
  const Vec2 p1 = quad.vertices[0], ea = quad.vertices[1], ph = quad.vertices[2], eb = quad.vertices[3];
  const double n = spec.truncation;
  Contour c;
  c.family = Family::Noid2k;
  c.space = spec.space;
  c.base = quad;
  c.c4 = c4;
  c.c5 = c5;
  // heights on the E_b side are fixed by arriving at p1 with height 0
  const double z7 = -rise(sp, eb, p1);
  const double z6 = z7 - (n + c5);
  const double z5 = z6 - rise(sp, ph, eb);
  c.arcs.push_back(horizontal_arc(sp, Vec3(p1.x(), p1.y(), 0.0), ea, "p1"));
  c.arcs.push_back(vertical_arc(c.arcs.back().end, c.arcs.back().end.z() + n + c4, "p2"));
  c.arcs.push_back(horizontal_arc(sp, c.arcs.back().end, ph, "p3"));
  c.arcs.push_back(vertical_arc(c.arcs.back().end, z5, "p4"));
  c.arcs.push_back(horizontal_arc(sp, c.arcs.back().end, eb, "p5"));
  c.arcs.push_back(vertical_arc(c.arcs.back().end, c.arcs.back().end.z() + n + c5, "p6"));
  c.arcs.push_back(horizontal_arc(sp, c.arcs.back().end, p1, "p7"));
  return c;
}

double noid2k_gap(const Contour& c) {
  const Arc& v = c.arc("p4");
  return v.start.z() - v.end.z();
}

AngleAudit audit_contour(const Contour& c) {
  const Space sp(c.space);
  AngleAudit out;
  out.closure = c.closure_error();
  const std::size_t n = c.arcs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Arc& cur = c.arcs[i];
    const Arc& prev = c.arcs[(i + n - 1) % n];
    const Vec3 p = cur.start;
    const Vec3 a = -incoming(prev), b = outgoing(cur);
    const double cs = sp.inner(p, a, b) / (sp.norm(p, a) * sp.norm(p, b));
    out.labels.push_back(cur.label);
    out.angles.push_back(std::acos(std::clamp(cs, -1.0, 1.0)));
    for (std::size_t j = 0; j < cur.samples.size(); ++j) {
      const Vec3& q = cur.samples.points[j];
      if (cur.type == ArcType::Vertical) {
        out.max_vertical_drift = std::max(out.max_vertical_drift, (q.head<2>() - cur.start.head<2>()).norm());
      } else {
        const Vec3& t = cur.samples.tangent[j];
        const double th = sp.theta(q.head<2>()).dot(t);
        out.max_horizontality = std::max(out.max_horizontality, std::abs(th) / sp.norm(q, t));
      }
    }
  }
  return out;
}

namespace {

// Excess over U4 (upper = true) or under U5 away from the edges p3p4 and p5p6.
double umbrella_excess(const Contour& c, bool upper) {
  const Space sp(c.space);
  const Vec3 top = c.vertex("p4"), bottom = c.vertex("p5");
  double worst = -std::numeric_limits<double>::infinity();
  for (const Arc& arc : c.arcs) {
    if (arc.label == (upper ? "p3" : "p5")) continue;
    for (const Vec3& q : arc.samples.points) {
      const double e = upper ? q.z() - sp.umbrella_height(top, q.head<2>())
                             : sp.umbrella_height(bottom, q.head<2>()) - q.z();
      worst = std::max(worst, e);
    }
  }
  return worst;
}

constexpr double kUmbrellaTol = 1e-9;

}  // namespace

double umbrella_violation(const Contour& c) { return std::max(umbrella_excess(c, true), umbrella_excess(c, false)); }

Retranslation retranslate(const NoidSpec& spec, int max_doublings) {
  Retranslation r;
  const Contour base = noid2k_contour(spec);
  r.gap_before = noid2k_gap(base);
  auto solve = [&](bool upper) {
    if (umbrella_excess(base, upper) <= kUmbrellaTol) return 0.0;
    double c = 1e-3;
    for (int i = 0; i <= max_doublings; ++i, c *= 2.0) {
      const Contour t = upper ? noid2k_contour(spec, c, 0.0) : noid2k_contour(spec, 0.0, c);
      if (umbrella_excess(t, upper) <= kUmbrellaTol) return c;
      ++r.doublings;
    }
    throw NumericalError("no retranslation clears the umbrellas");
  };
  r.c4 = solve(true);
  r.c5 = solve(false);
  r.gap_after = noid2k_gap(noid2k_contour(spec, r.c4, r.c5));
  return r;
}

double BoundaryData::edge_height(std::size_t i, const Vec2& q) const {
  const Space sp(space);
  return start_height.at(i) + sp.lift_step(polygon.at(i), q);
}

double BoundaryData::jump_size(std::size_t i) const {
  const std::size_t n = size();
  return start_height.at(i) - end_height.at((i + n - 1) % n);
}

BoundaryData boundary_heights(const Contour& c) {
  if (!c.closed) throw DomainError("boundary data needs a closed contour");
  BoundaryData out;
  out.space = c.space;
  const std::size_t n = c.arcs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Arc& arc = c.arcs[i];
    if (arc.type != ArcType::Horizontal) continue;
    out.polygon.push_back(arc.start.head<2>());
    out.start_height.push_back(arc.start.z());
    out.end_height.push_back(arc.end.z());
    out.jump.push_back(c.arcs[(i + n - 1) % n].type == ArcType::Vertical);
  }
  // non-adjacent sides must not cross
  const Base base(c.space.kappa_e());
  const std::size_t m = out.polygon.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      const Vec2 a = out.polygon[i], b = out.polygon[(i + 1) % m];
      const Vec2 p = out.polygon[j], q = out.polygon[(j + 1) % m];
      const double ha = base.heading(a, b), hp = base.heading(p, q);
      const double s1 = base.side(a, ha, p), s2 = base.side(a, ha, q);
      const double s3 = base.side(p, hp, a), s4 = base.side(p, hp, b);
      if (s1 * s2 < 0.0 && s3 * s4 < 0.0) throw DomainError("projected contour is not a simple polygon");
    }
  return out;
}

ConeAngle tangent_cone_angle(double h_plus, double h_minus, double delta, double phi, double epsilon,
                             const AngleProfile& beta_plus, const AngleProfile& beta_minus) {
  const double mid = 0.5 * (h_plus - h_minus);
  const double bp = beta_plus(mid), bm = beta_minus(mid);
  if (!std::isfinite(bp) || !std::isfinite(bm)) throw DomainError("angle profile undefined at the mid height");
  ConeAngle out;
  out.psi = bp + bm + delta;
  out.psi_sup = 2.0 * (kPi - phi - epsilon) + delta;
  out.below_pi = out.psi < kPi;
  return out;
}

double angle_defect(const BasePolygon& poly) {
  double sum = 0.0;
  for (double a : poly.interior_angles) sum += a;
  return (static_cast<double>(poly.vertices.size()) - 2.0) * kPi - sum;
}

void write_contour(std::ostream& os, const Contour& c) {
  os << std::setprecision(17);
  os << "contour " << family_name(c.family) << ' ' << (c.closed ? "closed" : "open") << '\n';
  os << "space " << c.space.kappa << ' ' << c.space.h_mean << '\n';
  os << "retranslation " << c.c4 << ' ' << c.c5 << '\n';
  os << "arcs " << c.arcs.size() << '\n';
  for (const Arc& a : c.arcs) {
    os << (a.type == ArcType::Horizontal ? 'H' : 'V') << ' ' << a.label;
    for (int i = 0; i < 3; ++i) os << ' ' << a.start[i];
    for (int i = 0; i < 3; ++i) os << ' ' << a.end[i];
    os << '\n';
  }
}

Contour read_contour(std::istream& is) {
  auto expect_line = [&](const std::string& key) {
    std::string line;
    while (std::getline(is, line))
      if (!line.empty() && line[0] != '#') break;
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw DomainError("contour text: expected '" + key + "', got '" + k + "'");
    std::string rest;
    std::getline(ss, rest);
    return std::istringstream(rest);
  };
  Contour c;
  {
    auto ss = expect_line("contour");
    std::string fam, cl;
    ss >> fam >> cl;
    if (fam != "knoid" && fam != "noid2k") throw DomainError("contour text: unknown family " + fam);
    c.family = fam == "knoid" ? Family::Knoid : Family::Noid2k;
    c.closed = cl != "open";
  }
  {
    auto ss = expect_line("space");
    if (!(ss >> c.space.kappa >> c.space.h_mean)) throw DomainError("contour text: bad space line");
    c.space.validate();
  }
  {
    auto ss = expect_line("retranslation");
    if (!(ss >> c.c4 >> c.c5)) throw DomainError("contour text: bad retranslation line");
  }
  std::size_t count = 0;
  {
    auto ss = expect_line("arcs");
    if (!(ss >> count)) throw DomainError("contour text: bad arc count");
  }
  const Space sp(c.space);
  std::vector<Vec2> corners;
  for (std::size_t i = 0; i < count; ++i) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("contour text: missing arcs");
    std::istringstream ss(line);
    std::string type, label;
    Vec3 a, b;
    if (!(ss >> type >> label >> a[0] >> a[1] >> a[2] >> b[0] >> b[1] >> b[2]))
      throw DomainError("contour text: bad arc line");
    sp.check(a);
    sp.check(b);
    if (type == "H") {
      c.arcs.push_back(horizontal_arc(sp, a, b.head<2>(), label));
      corners.push_back(a.head<2>());
    } else if (type == "V") {
      if ((a.head<2>() - b.head<2>()).norm() > 1e-9) throw DomainError("contour text: vertical arc moves in the base");
      c.arcs.push_back(vertical_arc(a, b.z(), label));
    } else {
      throw DomainError("contour text: unknown arc type " + type);
    }
  }
  if (corners.size() >= 3) c.base = make_polygon(sp.base(), corners);
  return c;
}

}  // namespace noids
