// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "noids/sister.hpp"
#include "noids/solver.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace noids;
using oracle::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

// every converged solve of the run, for the maximum principle
std::vector<std::pair<std::string, SolveReport>> g_solves;

void record(const std::string& what, const SolveReport& r) { g_solves.push_back({what, r}); }

NoidSpec knoid(SpaceParams sp, double a, int k, double r) {
  NoidSpec s;
  s.family = Family::Knoid;
  s.space = sp;
  s.a = a;
  s.k = k;
  s.truncation = r;
  return s;
}

NoidSpec noid2k(SpaceParams sp, int k, double d, double alpha, double n) {
  NoidSpec s;
  s.family = Family::Noid2k;
  s.space = sp;
  s.k = k;
  s.d = d;
  s.alpha = alpha;
  s.truncation = n;
  return s;
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Unsigned geodesic triangle area by slicing (hyperbolic) or the shoelace formula.
double triangle_area(const SpaceParams& sp, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double ke = sp.kappa_e();
  if (std::abs(ke) < 1e-14) return 0.5 * std::abs(cross2(b - a, c - a));
  return oracle::sliced_triangle_area(std::sqrt(-ke), a, b, c);
}

// Orientation of a geodesic triangle: chart determinant, taken in the Klein disc for half-plane points.
double orientation(const SpaceParams& sp, const Vec2& a, const Vec2& b, const Vec2& c) {
  if (!(sp.kappa_e() < 0.0)) return cross2(b - a, c - a);
  auto klein = [](const Vec2& p) {
    const std::complex<double> z(p.x(), p.y()), w = (z - std::complex<double>(0, 1)) / (z + std::complex<double>(0, 1));
    const double f = 2.0 / (1.0 + std::norm(w));
    return Vec2(f * w.real(), f * w.imag());
  };
  const Vec2 ka = klein(a), kb = klein(b), kc = klein(c);
  return cross2(kb - ka, kc - ka);
}

// 1. lift rise around random star polygons against 2 tau times a fan-sliced area
void holonomy(Outcome& out) {
  const std::vector<SpaceParams> branches = {{-1.0, 0.3}, {-1.0, 0.5}, {0.0, 0.0}};
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int loops = 0;
  for (int t = 0; t < 100; ++t) {
    const SpaceParams prm = branches[t % 3];
    const Space sp(prm);
    const Base& base = sp.base();
    const Vec2 o = base.origin();
    const int n = 3 + t % 5;
    const double dir = u(rng) < 0.5 ? 1.0 : -1.0;
    std::vector<Vec2> v;
    for (int i = 0; i < n; ++i) v.push_back(base.shoot(o, dir * 2.0 * pi * (i + 0.4 * u(rng)) / n, 0.2 + 1.8 * u(rng)));
    // positive for clockwise loops in the chart
    double area = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec2 &a = v[i], &b = v[(i + 1) % n];
      area -= std::copysign(triangle_area(prm, o, a, b), orientation(prm, o, a, b));
    }
    const double rise = lift_rise(sp, geodesic_path(base, v, true));
    worst = std::max(worst, std::abs(rise - 2.0 * sp.tau() * area) / (1.0 + std::abs(area)));
    ++loops;
  }
  out.note << loops << " loops over half-plane, Heisenberg and Euclidean models, worst scaled error " << worst;
  out.require(worst < 1e-6, "scaled error < 1e-6");
}

// 2. Scherk graph
void scherk(Outcome& out) {
  const double u = scherk_height({{-1.0, 0.0}, 1}, pi / 4);
  const double err = std::abs(u - std::log(1.0 + std::sqrt(2.0)));
  double resid = 0.0, mce = 0.0;
  for (double h : {0.0, 0.3, 0.49}) {
    const ScherkParams prm{{-1.0, h}, 1};
    for (int i = 0; i < 200; ++i)
      resid = std::max(resid, std::abs(scherk_conservation_residual(prm, i * (pi / 2) / 200)));
    const Space sp(prm.space);
    for (double s = 0.0; s <= pi / 2 - 0.05; s += 0.05)
      for (double r : {0.5, 1.0, 2.0, 3.0}) {
        const Vec2 p(r * std::cos(s), r * std::sin(s) + 1e-3);
        mce = std::max(mce, std::abs(mce_residual(sp, scherk_jet(prm, p), p)));
      }
  }
  out.note << "|u(pi/4) - ln(1+sqrt2)| = " << err << ", conservation " << resid << ", mce " << mce;
  out.require(err < 1e-6, "u(pi/4)");
  out.require(resid < 1e-10, "conservation residual < 1e-10");
  out.require(mce < 1e-6, "mce residual < 1e-6");
}

// 3. ruled reference surfaces
double max_mean_curvature(const Space& sp, const SurfacePatch& patch, int& samples, double step = 1e-3) {
  double worst = 0.0;
  const int n = 10;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = patch.u0 + (patch.u1 - patch.u0) * (0.05 + 0.9 * i / (n - 1));
      const double v = patch.v0 + (patch.v1 - patch.v0) * (0.05 + 0.9 * j / (n - 1));
      worst = std::max(worst, std::abs(mean_curvature(sp, patch.eval, u, v, step)));
      ++samples;
    }
  return worst;
}

void reference(Outcome& out) {
  double worst = 0.0;
  int surfaces = 0, min_samples = 1 << 30;
  auto run = [&](const Space& sp, const SurfacePatch& p, double step = 1e-3) {
    int samples = 0;
    worst = std::max(worst, max_mean_curvature(sp, p, samples, step));
    min_samples = std::min(min_samples, samples);
    ++surfaces;
  };
  for (const SpaceParams& prm : std::vector<SpaceParams>{{-1, 0}, {-1, 0.3}, {-1, 0.5}, {0, 0}}) {
    const Space sp(prm);
    const Vec3 c = sp.base().hyperbolic() ? Vec3(0.3, 1.1, 0.2) : Vec3(0.3, -0.4, 0.2);
    run(sp, umbrella_patch(sp, c, 1.0));
    run(sp, slice_patch(sp, c, 0.4, 1.0, 1.0));
    run(sp, vertical_plane(sp, c.head<2>(), 0.4, 1.0, 1.0));
    for (double s : {0.0, prm.tau(), 1.0}) run(sp, helicoid_patch(sp, s, 1.0, 1.0, c, 0.2));
    for (double s : {20.0, -20.0}) run(sp, helicoid_patch(sp, s, 1.0, 0.1, c, 0.2), 1e-4);
  }
  out.note << surfaces << " patches, " << min_samples << " samples each, max |H| " << worst;
  out.require(min_samples >= 100, "at least 100 samples");
  out.require(worst < 1e-5, "|H| < 1e-5");
}

// 4. contour gaps and angles
void contours(Outcome& out) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<SpaceParams> branches = {{-1, 0}, {-1, 0.3}, {-1, 0.49}, {-1, 0.5}, {-2, 0.2}, {0, 0}};
  double gap_r = 0.0, gap_n = 0.0, angle = 0.0;
  for (int t = 0; t < 20; ++t) {
    const SpaceParams sp = branches[t % branches.size()];
    const int k = 2 + t % 4;
    const NoidSpec ks = knoid(sp, 0.3 + 1.5 * u(rng), k, 1.0 + 3.0 * u(rng));
    const auto tri = knoid_triangle(ks).vertices;
    const double s = ks.truncation * ks.truncation;
    gap_r = std::max(gap_r, std::abs(knoid_gap(knoid_contour(ks)) - (s - 2.0 * sp.tau() * triangle_area(sp, tri[0], tri[1], tri[2]))));

    const NoidSpec ns = noid2k(sp, k, 0.3 + u(rng), (0.05 + 0.95 * u(rng)) * pi / (2 * k), 1.0 + 4.0 * u(rng));
    const Contour nc = noid2k_contour(ns);
    const auto& q = noid2k_quad(ns).vertices;
    const double qa = triangle_area(sp, q[0], q[1], q[2]) + triangle_area(sp, q[0], q[2], q[3]);
    gap_n = std::max(gap_n, std::abs(noid2k_gap(nc) - (2.0 * sp.h_mean * qa + 2.0 * ns.truncation)));
    const AngleAudit au = audit_contour(nc);
    int right = 0;
    for (std::size_t i = 1; i < au.angles.size(); ++i) {
      angle = std::max(angle, std::abs(au.angles[i] - pi / 2));
      ++right;
    }
    if (right != 6) angle = std::max(angle, 1.0);
    angle = std::max(angle, std::abs(au.angles[0] - pi / k));
  }
  out.note << "20 specs each, k-noid gap error " << gap_r << ", 2k-noid gap error " << gap_n << ", angle error " << angle;
  out.require(gap_r < 1e-6, "k-noid gap");
  out.require(gap_n < 1e-6, "2k-noid gap");
  out.require(angle < 1e-8, "angles");
}

// 5. area gradient, maximum principle, mce convergence order
void solver(Outcome& out) {
  double grad = 0.0;
  for (SpaceParams sp : {SpaceParams{-1.0, 0.0}, SpaceParams{-1.0, 0.5}, SpaceParams{0.0, 0.0}}) {
    const Space space(sp);
    const auto tri = knoid_triangle(knoid(sp, 1.0, 3, 2.0)).vertices;
    const Mesh m = mesh_from_pieces(space.base(), {{tri[0], tri[1], tri[2]}}, 1);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> z(m.dofs());
    for (auto& v : z) v = u(rng);
    Eigen::VectorXd g;
    discrete_graph_area(space, m, z, &g);
    const double h = 1e-6;
    for (std::size_t i = 0; i < m.dofs(); ++i) {
      auto zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      const double fd = (discrete_graph_area(space, m, zp) - discrete_graph_area(space, m, zm)) / (2 * h);
      grad = std::max(grad, std::abs(fd - g(static_cast<Eigen::Index>(i))) / std::max(1.0, std::abs(fd)));
    }
  }
  SolverOptions o;
  o.h = 0.125;
  const RefinementStudy st = refinement_study(knoid_contour(knoid({-1.0, 0.0}, 1.0, 3, 2.0)), o, 2);
  for (std::size_t i = 0; i < st.solves.size(); ++i) record("refinement level " + std::to_string(st.levels[i]), st.solves[i]);
  double order = st.orders.empty() ? 0.0 : st.orders[0];
  for (double q : st.orders) order = std::min(order, q);
  out.note << "gradient relative error " << grad << ", mce orders";
  for (double q : st.orders) out.note << " " << q;
  out.note << " on " << st.nodes << " nodes";
  out.require(grad < 1e-6, "gradient < 1e-6");
  out.require(st.orders.size() == 2 && order >= 1.5, "order >= 1.5 under two refinements");
  // maximum principle over every solve of the run is checked at the end
}

// 6. truncation ladders
void ladders(Outcome& out) {
  SolverOptions o;
  o.h = 0.125;
  auto run = [&](const std::string& name, const NoidSpec& spec) {
    const LadderReport r = convergence_ladder(spec, {2.0, 3.0, 4.0}, o);
    for (std::size_t i = 0; i < r.solves.size(); ++i) record(name + " rung " + std::to_string(i), r.solves[i]);
    bool dominated = !r.barriers.empty();
    for (const auto& b : r.barriers) dominated = dominated && b.dominated;
    out.note << " " << name << ": nodewise violation " << r.worst_nodewise << ", sup-diffs";
    for (double d : r.sup_differences) out.note << " " << d;
    out.note << (dominated ? ", dominated" : ", not dominated") << ";";
    out.require(r.nodewise_monotone, name + " nodewise monotone");
    out.require(r.differences_decreasing, name + " decreasing sup-differences");
    out.require(dominated, name + " barrier domination");
  };
  run("k-noid H2xR", knoid({-1.0, 0.0}, 1.0, 3, 2.0));
  run("k-noid H=0.3", knoid({-1.0, 0.3}, 1.0, 3, 2.0));
  run("k-noid R3", knoid({0.0, 0.0}, 1.0, 3, 2.0));
  run("2k-noid H2xR", noid2k({-1.0, 0.0}, 2, 1.0, pi / 8, 2.0));
  run("2k-noid H=0.3", noid2k({-1.0, 0.3}, 2, 1.0, pi / 8, 2.0));
  run("2k-noid R3", noid2k({0.0, 0.0}, 2, 1.0, pi / 8, 2.0));
}

// 7. sister curve audit
void sister(Outcome& out) {
  SolverOptions o;
  o.h = 0.25;
  auto run = [&](const std::string& name, const NoidSpec& spec) {
    const Contour c = spec.family == Family::Knoid ? knoid_contour(spec) : noid2k_contour(spec);
    const Solution sol = solve_contour(c, o);
    record(name, sol.report);
    const SisterAudit a = sister_audit(sol, c);
    std::size_t loops = 0;
    for (const auto& l : a.loops) loops += l.loops.size();
    out.note << " " << name << ": " << a.twists.size() << " verticals, min alpha' " << a.min_rate << ", max k~ - 2H "
             << a.max_k_tilde - 2.0 * spec.space.h_mean << ", " << loops << " loops;";
    out.require(!a.twists.empty(), name + " has verticals");
    out.require(a.min_rate > 0.0, name + " alpha' > 0");
    out.require(a.max_k_tilde < 2.0 * spec.space.h_mean, name + " k~ < 2H");
    out.require(loops == 0, name + " no self-intersections");
  };
  run("k-noid H=0", knoid({-1.0, 0.0}, 1.0, 3, 2.0));
  run("k-noid H=0.3", knoid({-1.0, 0.3}, 1.0, 3, 2.0));
  run("k-noid H=0.5", knoid({-1.0, 0.5}, 1.0, 3, 2.0));
  run("k-noid R3", knoid({0.0, 0.0}, 1.0, 3, 2.0));
  run("2k-noid H=0.5", noid2k({-1.0, 0.5}, 2, 1.0, pi / 8, 3.0));

  // circle of curvature 2 in H^2 closes once
  const double k = 2.0, r = std::atanh(1.0 / k), L = 2.0 * pi * std::sinh(r);
  double resid = 0.0;
  for (double H : {0.0, 0.3, 0.5}) {
    const auto rep = gauss_bonnet_loop_check(mirror_curve(-1.0, H, twist_from_rate(H, L, [&](double) { return 2.0 * H + k; }, 2001)), -1.0, H);
    resid = std::max(resid, rep.loops.size() == 1 ? std::abs(rep.loops[0].residual) : 1e300);
  }
  out.note << " circle Gauss-Bonnet residual " << resid;
  out.require(resid < 1e-6, "Gauss-Bonnet residual < 1e-6");
}

// 8. mean-convex barriers for the 2k-noid Plateau contour
void mean_convexity(Outcome& out) {
  const SpaceParams prm{-1.0, 0.5};
  const NoidSpec spec = noid2k(prm, 2, 1.0, pi / 8, 3.0);
  const Space sp(prm);
  const Base& base = sp.base();
  const Retranslation rt = retranslate(spec);
  const Contour c = noid2k_contour(spec, rt.c4, rt.c5);
  SolverOptions o;
  o.h = 0.125;
  const Solution sol = solve_contour(c, o);
  record("2k-noid n=3", sol.report);
  const Mesh& m = sol.graph.mesh;

  // between the umbrellas U5 (below) and U4 (above)
  const Vec3 p4 = c.vertex("p4"), p5 = c.vertex("p5");
  double slab = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < m.dofs(); ++d) {
    slab = std::min(slab, sp.umbrella_height(p4, m.pos[d]) - sol.graph.z[d]);
    slab = std::min(slab, sol.graph.z[d] - sp.umbrella_height(p5, m.pos[d]));
  }
  // on the contour's side of the vertical planes over p1p2 and p1p7
  const Vec2 q1 = c.vertex("p1").head<2>(), q2 = c.vertex("p2").head<2>(), q7 = c.vertex("p7").head<2>();
  const Vec2 inner = c.vertex("p4").head<2>();
  const double h12 = base.heading(q1, q2), h17 = base.heading(q1, q7);
  const double s12 = base.side(q1, h12, inner) > 0 ? 1.0 : -1.0, s17 = base.side(q1, h17, inner) > 0 ? 1.0 : -1.0;
  double half = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < m.dofs(); ++d)
    half = std::min({half, s12 * base.side(q1, h12, m.pos[d]), s17 * base.side(q1, h17, m.pos[d])});

  // level angles of the symmetric piece M_{d,2k}: a k-noid piece with necksize d and 2k ends
  const NoidSpec piece = knoid(prm, spec.d, 2 * spec.k, 3.0);
  const Contour pc = knoid_contour(piece);
  const Solution ps = solve_contour(pc, o);
  record("M_{d,2k} piece", ps.report);
  const BoundaryData bd = boundary_heights(pc);
  const TwistProfile axis = twist_along_vertical(ps.graph, bd, 1);
  const AngleProfile beta = level_angle_profile(axis);
  const double eps = angle_defect(knoid_triangle(piece));
  const double delta = spec.phi() / 2.0 - spec.alpha;

  // S+ raised by h+, S- lowered by h-, each profile read from its own horizontal edge
  const double h_plus = 1e-3, h_minus = 0.25;
  const AngleProfile beta_plus = [&](double h) { return beta(h - h_plus); };
  const AngleProfile beta_minus = [&](double h) { return beta(h + h_minus); };
  const ConeAngle cone = tangent_cone_angle(h_plus, h_minus, delta, spec.phi(), eps, beta_plus, beta_minus);
  double beta_max = 0.0;
  for (double h = 0.0; h <= axis.length(); h += axis.length() / 200) beta_max = std::max(beta_max, beta(h));
  const double beta_bound = pi - pi / (2 * spec.k) - eps;
  double h_minus_sup = 0.0;
  for (double hm = 0.0; hm <= axis.length(); hm += 0.01) {
    const auto probe = tangent_cone_angle(h_plus, hm, delta, spec.phi(), eps, beta_plus,
                                          [&](double h) { return beta(h + hm); });
    if (!probe.below_pi) break;
    h_minus_sup = hm;
  }

  out.note << "slab margin " << slab << ", halfspace margin " << half << ", psi " << cone.psi << " (delta " << delta
           << ", beta max " << beta_max << " < " << beta_bound << "), psi < pi for h- up to " << h_minus_sup;
  out.require(sol.report.converged, "solve converged");
  out.require(slab >= -1e-9, "inside the umbrella slab");
  out.require(half >= -1e-9, "inside the vertical halfspaces");
  out.require(axis.monotone && beta_max < beta_bound, "beta within its bound");
  out.require(cone.below_pi && cone.psi < pi, "psi < pi");
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void(Outcome&)>>> criteria = {
      {1, holonomy}, {2, scherk}, {3, reference}, {4, contours},
      {5, solver},   {6, ladders}, {7, sister},   {8, mean_convexity}};
  std::vector<Outcome> results(criteria.size());
  std::vector<double> seconds(criteria.size());
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(results[i]);
    } catch (const std::exception& e) {
      results[i].require(false, std::string("exception: ") + e.what());
    }
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  // maximum principle on every solve above, all of which must have converged
  double excess = 0.0;
  for (const auto& [what, r] : g_solves) {
    results[4].require(r.converged, what + " converged");
    excess = std::max(excess, r.max_principle_excess);
  }
  results[4].note << ", max principle excess " << excess << " over " << g_solves.size() << " solves";
  results[4].require(excess == 0.0, "discrete maximum principle");

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::printf("criterion %d %s (%.1fs): %s\n", criteria[i].first, results[i].pass ? "PASS" : "FAIL", seconds[i],
                results[i].note.str().c_str());
    failed += results[i].pass ? 0 : 1;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
