#include "noids/sister.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace noids;

namespace {

constexpr double pi = M_PI;

// z = pitch * angle over a sector of opening beta at the origin, vertical arc at corner 0.
DiscreteGraph helicoid_graph(double pitch, double beta, BoundaryData& bd, int level) {
  const Base base(0.0);
  const Vec2 o(0.0, 0.0), a(2.0, 0.0), b(2.0 * std::cos(beta), 2.0 * std::sin(beta));
  bd.space = {0.0, 0.0};
  bd.polygon = {o, a, b};
  bd.start_height = {0.0, 0.0, pitch * beta};
  bd.end_height = {0.0, pitch * beta, pitch * beta};
  bd.jump = {true, false, false};
  std::vector<double> dirichlet;
  DiscreteGraph g;
  g.space = bd.space;
  g.mesh = with_boundary(mesh_from_pieces(base, {{o, a, b}}, level), bd, dirichlet);
  g.z.resize(g.mesh.dofs());
  for (std::size_t d = 0; d < g.mesh.dofs(); ++d) {
    const Vec2 p = g.mesh.pos[d];
    g.z[d] = g.mesh.jump[d] ? dirichlet[d] : pitch * std::atan2(p.y(), p.x());
  }
  return g;
}

Vec2 xy(const Vec3& p) { return {p.x(), p.y()}; }

}  // namespace

TEST_CASE("sister curvature and torsion") {
  auto r = sister_curvature(0.5, 0.0, 0.0);
  CHECK(r.k_tilde == 0.5);
  CHECK(r.t_tilde == 0.0);
  r = sister_curvature(0.0, 0.7, -1.3);
  CHECK(r.k_tilde == 1.3);
  CHECK(r.t_tilde == 0.7);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double H = std::abs(u(rng)) / 10.0, k = u(rng), t = u(rng);
    r = sister_curvature(H, k, t);
    CHECK(r.k_tilde == -t + H);
    CHECK(r.t_tilde == k);
  }
}

TEST_CASE("twist integrates torsion plus H") {
  const double H = 0.3;
  const auto tp = twist_from_rate(H, 4.0, [&](double s) { return std::sin(s) + H; }, 401);
  for (std::size_t i = 0; i < tp.s.size(); ++i) {
    CHECK(tp.alpha[i] == doctest::Approx(1.0 - std::cos(tp.s[i]) + H * tp.s[i]).epsilon(1e-9));
    CHECK(tp.torsion[i] == doctest::Approx(std::sin(tp.s[i])).epsilon(1e-12));
  }
  // differentiating alpha recovers t + H
  for (std::size_t i = 1; i + 1 < tp.s.size(); ++i) {
    const double d = (tp.alpha[i + 1] - tp.alpha[i - 1]) / (tp.s[i + 1] - tp.s[i - 1]);
    CHECK(d - H == doctest::Approx(tp.torsion[i]).epsilon(1e-4));
  }
}

TEST_CASE("helicoid twist rate is the inverse pitch") {
  for (double pitch : {0.5, 1.0, 2.0, -1.5}) {
    BoundaryData bd;
    const double beta = 1.2;
    const auto g = helicoid_graph(pitch, beta, bd, 5);
    const auto tp = twist_along_vertical(g, bd, 0);
    CHECK(tp.monotone);
    CHECK(tp.opening == doctest::Approx(beta).epsilon(1e-12));
    CHECK(tp.length() == doctest::Approx(std::abs(pitch) * beta).epsilon(1e-12));
    CHECK(tp.alpha.back() == doctest::Approx(beta).epsilon(1e-12));
    for (double r : tp.rate) CHECK(r == doctest::Approx(1.0 / std::abs(pitch)).epsilon(0.02));
  }
  // the rate error shrinks under refinement at a fixed circle
  BoundaryData bd;
  TwistOptions opts;
  opts.radius = 0.5;
  double prev = 1e300;
  for (int level : {4, 5, 6}) {
    const auto tp = twist_along_vertical(helicoid_graph(1.0, 1.2, bd, level), bd, 0, opts);
    double err = 0.0;
    for (double r : tp.rate) err = std::max(err, std::abs(r - 1.0));
    CHECK(err < prev / 2.0);
    prev = err;
  }
}

TEST_CASE("level angle profile reads the helicoid rulings") {
  for (double pitch : {0.8, -1.5}) {
    BoundaryData bd;
    const double beta = 1.2;
    const auto g = helicoid_graph(pitch, beta, bd, 5);
    const auto tp = twist_along_vertical(g, bd, 0);
    const AngleProfile level = level_angle_profile(tp);
    CHECK(level(0.0) == 0.0);
    CHECK(level(tp.length()) == doctest::Approx(beta).epsilon(1e-12));
    // ruling at height h has angle h / |pitch| from the zero-height edge
    for (double h : {0.1, 0.4, 0.7}) {
      CHECK(level(h * std::abs(pitch)) == doctest::Approx(h).epsilon(0.02));
      CHECK(level(-h * std::abs(pitch)) == level(h * std::abs(pitch)));
    }
    CHECK(std::isnan(level(tp.length() + 0.1)));
  }
}

TEST_CASE("rate 2H gives a geodesic mirror curve") {
  const auto tp = twist_from_rate(0.25, 3.0, [](double) { return 0.5; }, 61);
  const auto flat = mirror_curve(0.0, 0.25, tp);
  for (const auto& p : flat.points) CHECK(std::abs(p.y()) < 1e-12);
  CHECK(flat.points.back().x() == doctest::Approx(3.0).epsilon(1e-10));
  const auto hyp = mirror_curve(-1.0, 0.25, tp);
  const Base base(-1.0);
  for (const auto& p : hyp.points) CHECK(xy(p).norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(base.distance(base.origin(), xy(hyp.points.back())) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(gauss_bonnet_loop_check(hyp, -1.0, 0.25).verdict == LoopVerdict::EmbeddedConsistent);
}

TEST_CASE("constant curvature mirror curves in the hyperbolic plane") {
  // k~ = 1 is the horocycle y = 1
  const auto horo = mirror_curve(-1.0, 0.0, twist_from_rate(0.0, 5.0, [](double) { return -1.0; }, 101));
  for (std::size_t i = 0; i < horo.size(); ++i) {
    CHECK(horo.points[i].x() == doctest::Approx(horo.params[i]).epsilon(1e-10));
    CHECK(horo.points[i].y() == doctest::Approx(1.0).epsilon(1e-10));
  }
  // |k~| < 1: a hypercycle, an unbounded Euclidean circle arc meeting the axis at an angle
  for (double c : {-0.5, 0.3}) {
    const auto hyper = mirror_curve(-1.0, 0.0, twist_from_rate(0.0, 8.0, [&](double) { return -c; }, 201));
    const Vec2 p = xy(hyper.points[0]), q = xy(hyper.points[100]), r = xy(hyper.points[200]);
    // circumcentre
    const double d = 2.0 * (p.x() * (q.y() - r.y()) + q.x() * (r.y() - p.y()) + r.x() * (p.y() - q.y()));
    const Vec2 centre((p.squaredNorm() * (q.y() - r.y()) + q.squaredNorm() * (r.y() - p.y()) +
                       r.squaredNorm() * (p.y() - q.y())) / d,
                      (p.squaredNorm() * (r.x() - q.x()) + q.squaredNorm() * (p.x() - r.x()) +
                       r.squaredNorm() * (q.x() - p.x())) / d);
    const double R = (p - centre).norm();
    for (const auto& x : hyper.points) CHECK((xy(x) - centre).norm() == doctest::Approx(R).epsilon(1e-8));
    CHECK(std::abs(centre.y()) / R == doctest::Approx(std::abs(c)).epsilon(1e-8));
    CHECK(self_intersections(hyper).empty());
    const Base base(-1.0);
    CHECK(base.distance(base.origin(), xy(hyper.points.back())) > 3.0);
  }
}

TEST_CASE("synthetic circles satisfy Gauss-Bonnet") {
  SUBCASE("hyperbolic") {
    const double k = 2.0, r = std::atanh(1.0 / k);
    const double L = 2.0 * pi * std::sinh(r), A = 2.0 * pi * (std::cosh(r) - 1.0);
    for (double H : {0.0, 0.5}) {
      const auto tp = twist_from_rate(H, L, [&](double) { return 2.0 * H + k; }, 2001);
      const auto curve = mirror_curve(-1.0, H, tp);
      const auto rep = gauss_bonnet_loop_check(curve, -1.0, H);
      REQUIRE(rep.loops.size() == 1);
      CHECK(rep.verdict == LoopVerdict::ContradictionFound);
      const auto& loop = rep.loops[0];
      CHECK(std::abs(loop.residual) < 1e-6);
      CHECK(loop.area == doctest::Approx(A).epsilon(1e-8));
      CHECK(loop.length == doctest::Approx(L).epsilon(1e-8));
      CHECK(loop.orientation == -1);
      CHECK(std::abs(loop.corner_angle) < 1e-6);
      CHECK(loop.forced_twist == doctest::Approx(loop.measured_twist).epsilon(1e-6));
      CHECK(loop.exceeds_pi);
    }
  }
  SUBCASE("euclidean") {
    const double k = 0.8, L = 2.0 * pi / k;
    const auto curve = mirror_curve(0.0, 0.0, twist_from_rate(0.0, L, [&](double) { return -k; }, 2001));
    const auto rep = gauss_bonnet_loop_check(curve, 0.0);
    REQUIRE(rep.loops.size() == 1);
    CHECK(std::abs(rep.loops[0].residual) < 1e-6);
    CHECK(rep.loops[0].area == doctest::Approx(pi / (k * k)).epsilon(1e-8));
    CHECK(rep.loops[0].orientation == 1);
  }
}

TEST_CASE("self-intersection sweep agrees with a pairwise search") {
  // curling curves with several crossings
  for (double a : {-3.0, -1.5, 2.0}) {
    const auto curve = mirror_curve(-1.0, 0.0, twist_from_rate(0.0, 12.0, [&](double s) { return a + 0.3 * s; }, 601), 4);
    const auto sweep = self_intersections(curve);
    std::size_t brute = 0;
    const std::size_t n = curve.size();
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 2; j + 1 < n; ++j) {
        const Vec2 p0 = xy(curve.points[i]), p1 = xy(curve.points[i + 1]);
        const Vec2 q0 = xy(curve.points[j]), q1 = xy(curve.points[j + 1]);
        auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
          return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
        };
        if (orient(p0, p1, q0) * orient(p0, p1, q1) < 0.0 && orient(q0, q1, p0) * orient(q0, q1, p1) < 0.0)
          pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    brute = pairs.size();
    CHECK(sweep.size() == brute);
    for (std::size_t m = 0; m < std::min(sweep.size(), pairs.size()); ++m) {
      CHECK(sweep[m].i == pairs[m].first);
      CHECK(sweep[m].j == pairs[m].second);
    }
    // every loop closes up to Gauss-Bonnet
    for (const auto& loop : gauss_bonnet_loop_check(curve, -1.0).loops) CHECK(std::abs(loop.residual) < 1e-3);
  }
}

TEST_CASE("geodesics have no loops") {
  const auto curve = mirror_curve(-1.0, 0.5, twist_from_rate(0.5, 8.0, [](double) { return 1.0; }, 401));
  CHECK(gauss_bonnet_loop_check(curve, -1.0, 0.5).loops.empty());
}

TEST_CASE("mirror curves are parametrised by arc length") {
  const auto tp = twist_from_rate(0.5, 6.0, [](double s) { return 0.2 + 0.1 * std::sin(s); }, 241);
  const auto curve = mirror_curve(-1.0, 0.5, tp, 16);
  CHECK(curve.params.back() == doctest::Approx(tp.length()).epsilon(1e-14));
  const Base base(-1.0);
  double len = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) len += base.distance(xy(curve.points[i - 1]), xy(curve.points[i]));
  CHECK(len == doctest::Approx(tp.length()).epsilon(1e-5));
  for (std::size_t i = 0; i < curve.size(); ++i)
    CHECK(base.conformal(xy(curve.points[i])) * xy(curve.tangent[i]).norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solved k-noid verticals twist monotonically") {
  for (SpaceParams sp : {SpaceParams{-1.0, 0.5}, SpaceParams{-1.0, 0.0}, SpaceParams{0.0, 0.0}}) {
    NoidSpec spec;
    spec.space = sp;
    spec.k = 3;
    spec.a = 1.0;
    spec.truncation = 2.0;
    const Contour c = knoid_contour(spec);
    const auto sol = solve_contour(c);
    const auto audit = sister_audit(sol, c);
    REQUIRE(audit.twists.size() == 2);
    CHECK(audit.ok);
    CHECK(audit.min_rate > 0.0);
    CHECK(audit.max_k_tilde < 2.0 * sp.h_mean);
    for (std::size_t i = 0; i < audit.twists.size(); ++i) {
      const auto& tp = audit.twists[i];
      CHECK(tp.monotone);
      CHECK(tp.alpha.back() == doctest::Approx(tp.opening).epsilon(1e-12));
      CHECK(audit.loops[i].verdict == LoopVerdict::EmbeddedConsistent);
      CHECK(audit.mirrors[i].params.back() == doctest::Approx(tp.length()).epsilon(1e-14));
    }
  }
}
