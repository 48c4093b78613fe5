#include "noids/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <utility>

namespace noids {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * cross(b - a, c - a); }

struct WorkMesh {
  std::vector<Vec2> w;      // chart positions
  std::vector<Vec2> p;      // base positions
  std::vector<std::array<int, 3>> tris;
};

// Geodesic a.x = c in the chart.
struct Line {
  Vec2 a;
  double c;
};

Line line_through(const Vec2& p, const Vec2& q) {
  const Vec2 a(q.y() - p.y(), p.x() - q.x());
  return {a, a.dot(p)};
}

std::optional<Vec2> meet(const Line& l1, const Line& l2) {
  const double det = l1.a.x() * l2.a.y() - l1.a.y() * l2.a.x();
  if (!(std::abs(det) > 1e-14 * l1.a.norm() * l2.a.norm())) return std::nullopt;
  return Vec2((l1.c * l2.a.y() - l2.c * l1.a.y()) / det, (l1.a.x() * l2.c - l2.a.x() * l1.c) / det);
}

// Direction at x of the geodesic through x perpendicular to l (through the pole of l in Klein).
Vec2 normal_direction(const Base& b, const Line& l, const Vec2& x) {
  if (b.hyperbolic() && std::abs(l.c) > 1e-14 * l.a.norm()) return l.a / l.c - x;
  return l.a;
}

Vec2 foot(const Base& b, const Line& l, const Vec2& x) {
  const Vec2 d = normal_direction(b, l, x);
  return x + (l.c - l.a.dot(x)) / l.a.dot(d) * d;
}

Line perpendicular(const Base& b, const Line& l, const Vec2& f) {
  return line_through(f, f + normal_direction(b, l, f));
}

// Bisector of the angle at corner k[i].
Line bisector(const Base& b, const std::array<Vec2, 3>& k, int i) {
  const Vec2 c = from_chart(b, k[i]), p = from_chart(b, k[(i + 1) % 3]), q = from_chart(b, k[(i + 2) % 3]);
  const double h1 = b.heading(c, p), h2 = b.heading(c, q);
  const double len = 0.1 * std::min(b.distance(c, p), b.distance(c, q));
  return line_through(k[i], to_chart(b, b.shoot(c, h1 + 0.5 * wrap_angle(h2 - h1), len)));
}

double fraction(const Vec2& x, const Vec2& p, const Vec2& q) { return (x - p).dot(q - p) / (q - p).squaredNorm(); }

// Geodesic midpoint, expressed in the chart (it lies on the chord).
Vec2 chart_midpoint(const Base& b, const Vec2& a, const Vec2& c) {
  if (!b.hyperbolic()) return 0.5 * (a + c);
  const double sa = 1.0 / std::sqrt(1.0 - a.squaredNorm()), sc = 1.0 / std::sqrt(1.0 - c.squaredNorm());
  return (sa * a + sc * c) / (sa + sc);
}

// Each piece is split from an interior point into six triangles, two per side, using the feet
// of the perpendiculars on the sides, so the triangles are right-angled at the feet and every
// corner lies in two of them. A free piece uses its incircle. A side already split by a
// neighbour pins the point to the perpendicular through that foot; when no point on it fits,
// the piece is first cut along the altitude from its widest corner into two right triangles.
WorkMesh coarse(const Base& base, const std::vector<std::array<Vec2, 3>>& pieces) {
  WorkMesh m;
  std::map<std::pair<double, double>, int> index;
  std::map<std::pair<int, int>, int> split;  // side -> node splitting it
  std::set<std::pair<int, int>> shared;      // sides of two pieces
  auto vertex = [&](const Vec2& p) {
    base.check(p);
    const auto key = std::make_pair(p.x(), p.y());
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    m.p.push_back(p);
    m.w.push_back(to_chart(base, p));
    index.emplace(key, static_cast<int>(m.w.size()) - 1);
    return static_cast<int>(m.w.size()) - 1;
  };
  auto derived = [&](const Vec2& w) {
    m.w.push_back(w);
    m.p.push_back(from_chart(base, w));
    return static_cast<int>(m.w.size()) - 1;
  };

  struct Plan {
    Vec2 centre;
    std::array<Vec2, 3> f;
    double margin = -1.0;   // smallest foot fraction or sub-area share
  };
  auto plan = [&](const std::array<Vec2, 3>& k, const std::array<Line, 3>& side, const std::array<int, 3>& pre,
                  const Vec2& c) {
    Plan p;
    p.centre = c;
    const double area = signed_area(k[0], k[1], k[2]);
    double margin = 1.0;
    for (int i = 0; i < 3; ++i) {
      const Vec2 &a = k[i], &b = k[(i + 1) % 3];
      p.f[i] = pre[i] >= 0 ? m.w[pre[i]] : foot(base, side[i], c);
      const double t = fraction(p.f[i], a, b);
      const double s1 = signed_area(a, p.f[i], c) / area, s2 = signed_area(p.f[i], b, c) / area;
      margin = std::min({margin, t, 1.0 - t, s1, s2});
    }
    if (std::isfinite(margin)) p.margin = margin;
    return p;
  };
  auto corner_angle = [&](const std::array<Vec2, 3>& k, int i) {
    const Vec2 c = from_chart(base, k[i]);
    const double h1 = base.heading(c, from_chart(base, k[(i + 1) % 3]));
    const double h2 = base.heading(c, from_chart(base, k[(i + 2) % 3]));
    return std::abs(wrap_angle(h2 - h1));
  };

  std::function<void(std::array<int, 3>, bool)> piece = [&](std::array<int, 3> v, bool may_cut) {
    std::array<Vec2, 3> k{m.w[v[0]], m.w[v[1]], m.w[v[2]]};
    const double area = signed_area(k[0], k[1], k[2]);
    if (!(std::abs(area) > 0.0)) throw DomainError("degenerate mesh piece");
    if (area < 0.0) {
      std::swap(v[1], v[2]);
      std::swap(k[1], k[2]);
    }
    std::array<Line, 3> side;
    std::array<int, 3> pre{-1, -1, -1};
    std::vector<int> fixed_sides;
    for (int i = 0; i < 3; ++i) {
      side[i] = line_through(k[i], k[(i + 1) % 3]);
      auto it = split.find(std::minmax(v[i], v[(i + 1) % 3]));
      if (it != split.end()) {
        pre[i] = it->second;
        fixed_sides.push_back(i);
      }
    }
    Plan best;
    if (fixed_sides.empty()) {
      if (auto c = meet(bisector(base, k, 0), bisector(base, k, 1))) best = plan(k, side, pre, *c);
    } else if (fixed_sides.size() == 1) {
      const int i = fixed_sides[0];
      const Vec2 t = m.w[pre[i]];
      const Line perp = perpendicular(base, side[i], t);
      for (int j = 1; j < 3; ++j) {
        const int e = (i + j) % 3;
        const auto x = meet(perp, side[e]);
        if (!x) continue;
        const double u = fraction(*x, k[e], k[(e + 1) % 3]);
        if (!(u > 0.0 && u < 1.0)) continue;
        for (int s = 1; s < 50; ++s) {
          const Plan p = plan(k, side, pre, t + (s / 50.0) * (*x - t));
          if (p.margin > best.margin) best = p;
        }
      }
    } else {
      const int i = fixed_sides[0], j = fixed_sides[1];
      if (auto c = meet(perpendicular(base, side[i], m.w[pre[i]]), perpendicular(base, side[j], m.w[pre[j]])))
        best = plan(k, side, pre, *c);
    }

    if (best.margin < 0.02 && may_cut && !fixed_sides.empty()) {
      std::array<int, 3> order{0, 1, 2};
      std::array<double, 3> ang{corner_angle(k, 0), corner_angle(k, 1), corner_angle(k, 2)};
      std::sort(order.begin(), order.end(), [&](int x, int y) { return ang[x] > ang[y]; });
      for (int wide : order) {
        const int opp = (wide + 1) % 3;  // side opposite the corner
        if (pre[opp] >= 0 || shared.count(std::minmax(v[opp], v[(opp + 1) % 3]))) continue;
        const Vec2 h = foot(base, side[opp], k[wide]);
        const double u = fraction(h, k[opp], k[(opp + 1) % 3]);
        if (!(u > 0.02 && u < 0.98)) continue;
        const int hn = derived(h);
        split.emplace(std::minmax(v[opp], v[(opp + 1) % 3]), hn);
        std::array<int, 3> r1{v[wide], v[opp], hn}, r2{v[wide], hn, v[(opp + 1) % 3]};
        if (pre[(wide + 2) % 3] >= 0) std::swap(r1, r2);  // constrained half first
        piece(r1, false);
        piece(r2, false);
        return;
      }
    }
    if (!(best.margin > 0.0)) {
      best.centre = (k[0] + k[1] + k[2]) / 3.0;
      for (int i = 0; i < 3; ++i) {
        const Vec2 a = k[i], c = k[(i + 1) % 3];
        if (pre[i] >= 0) {
          best.f[i] = m.w[pre[i]];
        } else {
          const double t = std::clamp(fraction(foot(base, side[i], best.centre), a, c), 0.25, 0.75);
          best.f[i] = a + t * (c - a);
        }
      }
    }
    std::array<int, 3> fn;
    for (int i = 0; i < 3; ++i) {
      fn[i] = pre[i] >= 0 ? pre[i] : derived(best.f[i]);
      split.emplace(std::minmax(v[i], v[(i + 1) % 3]), fn[i]);
    }
    const int ci = derived(best.centre);
    for (int i = 0; i < 3; ++i) {
      m.tris.push_back({v[i], fn[i], ci});
      m.tris.push_back({fn[i], v[(i + 1) % 3], ci});
    }
  };
  std::vector<std::array<int, 3>> ids;
  std::map<std::pair<int, int>, int> uses;
  for (const auto& pc : pieces) {
    ids.push_back({vertex(pc[0]), vertex(pc[1]), vertex(pc[2])});
    for (int i = 0; i < 3; ++i) ++uses[std::minmax(ids.back()[i], ids.back()[(i + 1) % 3])];
  }
  for (const auto& [side, count] : uses)
    if (count > 1) shared.insert(side);
  for (const auto& v : ids) piece(v, true);
  return m;
}

void refine(const Base& base, WorkMesh& m) {
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    m.w.push_back(chart_midpoint(base, m.w[key.first], m.w[key.second]));
    m.p.push_back(from_chart(base, m.w.back()));
    const int id = static_cast<int>(m.w.size()) - 1;
    mid.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> out;
  out.reserve(4 * m.tris.size());
  for (const auto& t : m.tris) {
    const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    out.push_back({t[0], ab, ca});
    out.push_back({ab, t[1], bc});
    out.push_back({ca, bc, t[2]});
    out.push_back({ab, bc, ca});
  }
  m.tris = std::move(out);
}

}  // namespace

Vec2 to_chart(const Base& b, const Vec2& p) {
  if (!b.hyperbolic()) return p;
  const double x = p.x(), y = p.y(), r2 = x * x + y * y;
  return {2.0 * x / (r2 + 1.0), (r2 - 1.0) / (r2 + 1.0)};
}

Vec2 from_chart(const Base& b, const Vec2& k) {
  if (!b.hyperbolic()) return k;
  const double q = std::sqrt(std::max(0.0, 1.0 - k.squaredNorm()));
  return {k.x() / (1.0 - k.y()), q / (1.0 - k.y())};
}

Eigen::Matrix2d chart_jacobian(const Base& b, const Vec2& k) {
  if (!b.hyperbolic()) return Eigen::Matrix2d::Identity();
  const double q = std::sqrt(std::max(0.0, 1.0 - k.squaredNorm())), d = 1.0 / (1.0 - k.y());
  Eigen::Matrix2d j;
  j << d, k.x() * d * d, -k.x() / q * d, -k.y() / q * d + q * d * d;
  return j;
}

std::vector<std::array<Vec2, 3>> polygon_pieces(const Base& base, const std::vector<Vec2>& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) throw DomainError("polygon needs at least three vertices");
  std::vector<Vec2> w;
  for (const auto& p : polygon) {
    base.check(p);
    w.push_back(to_chart(base, p));
  }
  double area = 0.0;
  for (std::size_t i = 0; i < n; ++i) area += cross(w[i], w[(i + 1) % n]);
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(area > 0.0 ? i : n - 1 - i);
  // self-intersection check
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      const Vec2 a = w[i], b = w[(i + 1) % n], c = w[j], d = w[(j + 1) % n];
      if (cross(b - a, c - a) * cross(b - a, d - a) < 0.0 && cross(d - c, a - c) * cross(d - c, b - c) < 0.0)
        throw DomainError("polygon is self-intersecting");
    }
  std::vector<std::array<Vec2, 3>> out;
  while (idx.size() > 3) {
    bool clipped = false;
    const std::size_t m = idx.size();
    for (std::size_t i = 0; i < m && !clipped; ++i) {
      const int a = idx[(i + m - 1) % m], b = idx[i], c = idx[(i + 1) % m];
      if (signed_area(w[a], w[b], w[c]) <= 0.0) continue;
      bool empty = true;
      for (int v : idx) {
        if (v == a || v == b || v == c) continue;
        if (signed_area(w[a], w[b], w[v]) >= 0.0 && signed_area(w[b], w[c], w[v]) >= 0.0 &&
            signed_area(w[c], w[a], w[v]) >= 0.0) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      out.push_back({polygon[a], polygon[b], polygon[c]});
      idx.erase(idx.begin() + static_cast<long>(i));
      clipped = true;
    }
    if (!clipped) throw DomainError("polygon could not be triangulated");
  }
  out.push_back({polygon[idx[0]], polygon[idx[1]], polygon[idx[2]]});
  return out;
}

Mesh mesh_from_pieces(const Base& base, const std::vector<std::array<Vec2, 3>>& pieces, int level) {
  if (pieces.empty()) throw DomainError("no mesh pieces");
  if (level < 0) throw DomainError("refinement level must be non-negative");
  WorkMesh wm = coarse(base, pieces);
  for (int i = 0; i < level; ++i) refine(base, wm);

  Mesh m;
  m.level = level;
  m.nodes = static_cast<int>(wm.w.size());
  m.pos = wm.p;
  m.chart = wm.w;
  for (const auto& t : wm.tris)
    if (!(signed_area(m.chart[t[0]], m.chart[t[1]], m.chart[t[2]]) > 0.0)) throw NumericalError("degenerate mesh triangle");
  m.tris = std::move(wm.tris);
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : m.tris)
    for (int e = 0; e < 3; ++e) ++uses[std::minmax(t[e], t[(e + 1) % 3])];
  m.boundary.assign(m.pos.size(), false);
  for (const auto& [edge, count] : uses)
    if (count == 1) m.boundary[edge.first] = m.boundary[edge.second] = true;
  m.node.resize(m.pos.size());
  for (std::size_t i = 0; i < m.pos.size(); ++i) m.node[i] = static_cast<int>(i);
  m.fixed = m.boundary;
  m.corner.assign(m.pos.size(), -1);
  m.jump.assign(m.pos.size(), false);
  return m;
}

double max_edge_length(const Base& base, const Mesh& mesh) {
  double worst = 0.0;
  for (const auto& t : mesh.tris)
    for (int e = 0; e < 3; ++e) worst = std::max(worst, base.distance(mesh.pos[t[e]], mesh.pos[t[(e + 1) % 3]]));
  return worst;
}

int level_for(const Base& base, const std::vector<std::array<Vec2, 3>>& pieces, double h) {
  if (!(h > 0.0)) throw DomainError("mesh size must be positive");
  for (int level = 0; level <= 9; ++level) {
    if (max_edge_length(base, mesh_from_pieces(base, pieces, level)) <= h) return level;
  }
  throw DomainError("mesh size too small for the refinement budget");
}

Mesh triangulate(const Base& base, const std::vector<Vec2>& polygon, double h) {
  const auto pieces = polygon_pieces(base, polygon);
  return mesh_from_pieces(base, pieces, level_for(base, pieces, h));
}

Mesh triangulate(const BasePolygon& polygon, double h) {
  return triangulate(Base(polygon.kappa_base), polygon.vertices, h);
}

Mesh with_boundary(Mesh m, const BoundaryData& bd, std::vector<double>& dirichlet) {
  const Base base(bd.space.kappa_e());
  const std::size_t np = bd.size();
  std::vector<Vec2> pw;
  for (const auto& p : bd.polygon) pw.push_back(to_chart(base, p));
  double scale = 0.0;
  for (const auto& p : pw) scale = std::max(scale, p.norm());
  const double tol = 1e-10 * std::max(scale, 1.0);

  auto on_edge = [&](std::size_t e, const Vec2& w) {
    const Vec2 a = pw[e], b = pw[(e + 1) % np];
    const Vec2 d = b - a;
    const double len = d.norm();
    if (std::abs(cross(d, w - a)) > tol * len) return false;
    const double t = d.dot(w - a);
    return t >= -tol * len && t <= len * len + tol * len;
  };

  const std::size_t n0 = m.pos.size();
  std::vector<int> edge_of(n0, -1);
  for (std::size_t i = 0; i < n0; ++i) {
    if (!m.boundary[i]) continue;
    const Vec2 w = m.chart[i];
    for (std::size_t c = 0; c < np; ++c)
      if ((w - pw[c]).norm() <= tol) m.corner[i] = static_cast<int>(c);
    if (m.corner[i] >= 0) continue;
    for (std::size_t e = 0; e < np; ++e)
      if (on_edge(e, w)) {
        edge_of[i] = static_cast<int>(e);
        break;
      }
    if (edge_of[i] < 0) throw DomainError("boundary node off the contour polygon");
  }

  dirichlet.assign(n0, 0.0);
  for (std::size_t i = 0; i < n0; ++i) {
    if (!m.boundary[i]) continue;
    if (m.corner[i] >= 0) {
      dirichlet[i] = bd.start_height[m.corner[i]];
    } else {
      dirichlet[i] = bd.edge_height(edge_of[i], m.pos[i]);
    }
  }

  // split jump corners
  for (std::size_t i = 0; i < n0; ++i) {
    const int c = m.corner[i];
    if (c < 0 || !bd.jump[c]) continue;
    const int e_out = c, e_in = static_cast<int>((c + np - 1) % np);
    bool first = true;
    for (auto& t : m.tris) {
      int slot = -1;
      for (int k = 0; k < 3; ++k)
        if (t[k] == static_cast<int>(i)) slot = k;
      if (slot < 0) continue;
      bool out_side = false, in_side = false;
      for (int k = 0; k < 3; ++k) {
        if (k == slot) continue;
        const int v = t[k];
        if (!m.boundary[v]) continue;
        const bool is_out = edge_of[v] == e_out || m.corner[v] == (c + 1) % static_cast<int>(np);
        const bool is_in = edge_of[v] == e_in || m.corner[v] == e_in;
        out_side = out_side || is_out;
        in_side = in_side || is_in;
      }
      if (out_side && in_side) throw DomainError("jump corner covered by a single triangle");
      int dof = static_cast<int>(i);
      if (!first) {
        dof = static_cast<int>(m.pos.size());
        m.pos.push_back(m.pos[i]);
        m.chart.push_back(m.chart[i]);
        m.node.push_back(static_cast<int>(i));
        m.boundary.push_back(true);
        m.corner.push_back(c);
        m.fixed.push_back(false);
        m.jump.push_back(true);
        dirichlet.push_back(0.0);
        t[slot] = dof;
      }
      first = false;
      m.jump[dof] = true;
      m.fixed[dof] = out_side || in_side;
      dirichlet[dof] = out_side ? bd.start_height[e_out] : in_side ? bd.end_height[e_in] : 0.0;
    }
  }
  return m;
}

}  // namespace noids
