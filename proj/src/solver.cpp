#include "noids/solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>

namespace noids {

namespace {

struct QuadPoint {
  double l0, l1, l2, w;
};

// Dunavant degree-5 rule, weights sum to 1.
const std::array<QuadPoint, 7> kRule = {{
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
    {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
    {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827},
}};

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct TriGeom {
  std::array<Vec2, 3> grad;  // gradients of the barycentric coordinates
  double area = 0.0;         // chart area
};

TriGeom tri_geom(const Mesh& m, const std::array<int, 3>& t) {
  const Vec2 &p0 = m.chart[t[0]], &p1 = m.chart[t[1]], &p2 = m.chart[t[2]];
  const double a2 = cross(p1 - p0, p2 - p0);
  if (!(std::abs(a2) > 0.0) || !std::isfinite(a2)) throw NumericalError("degenerate triangle");
  TriGeom g;
  g.grad[0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / a2;
  g.grad[1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / a2;
  g.grad[2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / a2;
  g.area = 0.5 * std::abs(a2);
  return g;
}

Vec2 tri_gradient(const TriGeom& g, const std::array<int, 3>& t, const std::vector<double>& z) {
  return z[t[0]] * g.grad[0] + z[t[1]] * g.grad[1] + z[t[2]] * g.grad[2];
}

std::vector<std::vector<int>> adjacency(const Mesh& m) {
  std::vector<std::set<int>> s(m.dofs());
  for (const auto& t : m.tris)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) s[t[i]].insert(t[j]);
  std::vector<std::vector<int>> out(m.dofs());
  for (std::size_t i = 0; i < s.size(); ++i) out[i].assign(s[i].begin(), s[i].end());
  return out;
}

// Two rings around a node, widened ring by ring until the cubic fit is well determined.
std::vector<int> neighbourhood(const std::vector<std::vector<int>>& adj, int dof) {
  std::set<int> seen{dof};
  std::vector<int> layer{dof};
  for (int ring = 0; ring < 2 || seen.size() < 16; ++ring) {
    std::vector<int> next;
    for (int v : layer)
      for (int w : adj[v])
        if (seen.insert(w).second) next.push_back(w);
    if (next.empty()) break;
    layer = std::move(next);
  }
  seen.erase(dof);
  return {seen.begin(), seen.end()};
}

// Cubic least squares in scaled offsets; the jet is read off the quadratic part.
GraphJet fit_with(const std::vector<std::vector<int>>& adj, const DiscreteGraph& g, int dof) {
  const auto ring = neighbourhood(adj, dof);
  if (ring.size() < 10) throw NumericalError("too few neighbours for a cubic fit");
  const Vec2 c = g.mesh.pos[dof];
  double scale = 0.0;
  for (int v : ring) scale += (g.mesh.pos[v] - c).norm();
  scale /= static_cast<double>(ring.size());
  Eigen::MatrixXd a(ring.size() + 1, 10);
  Eigen::VectorXd rhs(ring.size() + 1);
  auto row = [&](Eigen::Index r, const Vec2& d) {
    const double x = d.x(), y = d.y();
    a.row(r) << 1, x, y, 0.5 * x * x, x * y, 0.5 * y * y, x * x * x, x * x * y, x * y * y, y * y * y;
  };
  row(0, Vec2::Zero());
  rhs(0) = g.z[dof];
  for (std::size_t i = 0; i < ring.size(); ++i) {
    row(static_cast<Eigen::Index>(i + 1), (g.mesh.pos[ring[i]] - c) / scale);
    rhs(static_cast<Eigen::Index>(i + 1)) = g.z[ring[i]];
  }
  const Eigen::VectorXd k = a.colPivHouseholderQr().solve(rhs);
  GraphJet j;
  j.u = k(0);
  j.ux = k(1) / scale;
  j.uy = k(2) / scale;
  j.uxx = k(3) / (scale * scale);
  j.uxy = k(4) / (scale * scale);
  j.uyy = k(5) / (scale * scale);
  return j;
}

// Interior nodes whose fitting neighbourhood avoids the boundary and stays inside one coarse
// triangle (the refinement pattern is regular there).
std::vector<int> smooth_with(const Mesh& m, const std::vector<std::vector<int>>& adj) {
  const std::size_t per = std::size_t{1} << (2 * m.level);
  std::vector<long> patch(m.dofs(), -1);  // coarse triangle of a node, -2 when shared
  for (std::size_t t = 0; t < m.tris.size(); ++t)
    for (int v : m.tris[t]) {
      const long a = static_cast<long>(t / per);
      patch[v] = patch[v] == -1 || patch[v] == a ? a : -2;
    }
  std::vector<int> out;
  for (int i = 0; i < m.nodes; ++i) {
    if (m.boundary[i] || patch[i] < 0) continue;
    bool clear = true;
    for (int v : neighbourhood(adj, i))
      if (m.boundary[v] || patch[v] != patch[i]) {
        clear = false;
        break;
      }
    if (clear) out.push_back(i);
  }
  return out;
}

}  // namespace

double discrete_graph_area(const Space& space, const Mesh& mesh, const std::vector<double>& z,
                           Eigen::VectorXd* grad, SparseMatrix* hess) {
  if (z.size() != mesh.dofs()) throw DomainError("height vector does not match the mesh");
  const Base& base = space.base();
  const auto n = static_cast<Eigen::Index>(mesh.dofs());
  if (grad) grad->setZero(n);
  std::vector<Eigen::Triplet<double>> trips;
  double total = 0.0;
  for (const auto& t : mesh.tris) {
    const TriGeom g = tri_geom(mesh, t);
    const Vec2 du = tri_gradient(g, t, z);
    const Vec2 &p0 = mesh.chart[t[0]], &p1 = mesh.chart[t[1]], &p2 = mesh.chart[t[2]];
    Vec2 fg = Vec2::Zero();
    Mat2 fh = Mat2::Zero();
    for (const auto& q : kRule) {
      // Pulled back to the chart: density sigma |det J| sqrt(sigma^2 + v^T C v), C = (J^T J)^-1.
      const Vec2 k = q.l0 * p0 + q.l1 * p1 + q.l2 * p2;
      const Vec2 p = from_chart(base, k);
      const Mat2 jac = chart_jacobian(base, k);
      const Mat2 c = (jac.transpose() * jac).inverse();
      const double s = base.conformal(p), det = std::abs(jac.determinant());
      const Vec3 th = space.theta(p);
      const Vec2 v = du + jac.transpose() * Vec2(th.x(), th.y());
      const Vec2 cv = c * v;
      const double r = std::sqrt(s * s + v.dot(cv));
      const double w = q.w * g.area * s * det;
      total += w * r;
      fg += w / r * cv;
      fh += w * (c / r - cv * cv.transpose() / (r * r * r));
    }
    fh(1, 0) = fh(0, 1);
    if (grad)
      for (int i = 0; i < 3; ++i) (*grad)(t[i]) += fg.dot(g.grad[i]);
    if (hess)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trips.emplace_back(t[i], t[j], g.grad[i].dot(fh * g.grad[j]));
  }
  if (!std::isfinite(total)) throw NumericalError("non-finite discrete area");
  if (hess) {
    hess->resize(n, n);
    hess->setFromTriplets(trips.begin(), trips.end());
  }
  return total;
}

Solution solve_graph(const Space& space, const Mesh& mesh, const std::vector<double>& dirichlet,
                     const SolverOptions& opts) {
  if (!(opts.h > 0.0) || !(opts.tolerance > 0.0)) throw DomainError("invalid solver options");
  if (dirichlet.size() != mesh.dofs()) throw DomainError("Dirichlet vector does not match the mesh");
  const std::size_t n = mesh.dofs();
  std::vector<int> free_index(n, -1);
  std::vector<int> free_dofs;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    if (mesh.fixed[i]) {
      if (!std::isfinite(dirichlet[i])) throw DomainError("unbounded Dirichlet data");
      lo = std::min(lo, dirichlet[i]);
      hi = std::max(hi, dirichlet[i]);
    } else {
      free_index[i] = static_cast<int>(free_dofs.size());
      free_dofs.push_back(static_cast<int>(i));
    }
  }
  const auto nf = static_cast<Eigen::Index>(free_dofs.size());
  std::vector<double> z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (mesh.fixed[i]) z[i] = dirichlet[i];

  Solution sol;
  SolveReport& rep = sol.report;
  auto restrict_vec = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(nf);
    for (Eigen::Index i = 0; i < nf; ++i) out(i) = v(free_dofs[i]);
    return out;
  };
  auto restrict_mat = [&](const SparseMatrix& m) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        const int r = free_index[it.row()], c = free_index[it.col()];
        if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
      }
    SparseMatrix out(nf, nf);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  };

  if (nf > 0) {
    // harmonic initial guess
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    for (const auto& t : mesh.tris) {
      const TriGeom g = tri_geom(mesh, t);
      for (int i = 0; i < 3; ++i) {
        const int r = free_index[t[i]];
        if (r < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const double k = g.area * g.grad[i].dot(g.grad[j]);
          const int c = free_index[t[j]];
          if (c >= 0) trips.emplace_back(r, c, k);
          else rhs(r) -= k * z[t[j]];
        }
      }
    }
    SparseMatrix k(nf, nf);
    k.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(k);
    if (ldlt.info() != Eigen::Success) throw NumericalError("singular Laplace system");
    const Eigen::VectorXd z0 = ldlt.solve(rhs);
    for (Eigen::Index i = 0; i < nf; ++i) z[free_dofs[i]] = z0(i);
  }

  Eigen::VectorXd grad;
  SparseMatrix hess;
  double area = discrete_graph_area(space, mesh, z, &grad, &hess);
  Eigen::VectorXd gf = restrict_vec(grad);
  rep.gradient_norm = nf ? gf.lpNorm<Eigen::Infinity>() : 0.0;
  while (rep.gradient_norm > opts.tolerance && rep.iterations < opts.max_iterations) {
    ++rep.iterations;
    const SparseMatrix hf = restrict_mat(hess);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(hf);
    Eigen::VectorXd d;
    bool newton = ldlt.info() == Eigen::Success;
    if (newton) {
      d = ldlt.solve(-gf);
      newton = ldlt.info() == Eigen::Success && d.allFinite() && d.dot(gf) < 0.0;
    }
    if (!newton) {
      d = -gf;
      ++rep.gradient_steps;
    }
    const double slope = d.dot(gf);
    double step = 1.0;
    std::vector<double> trial = z;
    double trial_area = area;
    bool accepted = false;
    for (int b = 0; b <= opts.max_backtracks; ++b) {
      for (Eigen::Index i = 0; i < nf; ++i) trial[free_dofs[i]] = z[free_dofs[i]] + step * d(i);
      try {
        trial_area = discrete_graph_area(space, mesh, trial);
      } catch (const NumericalError&) {
        trial_area = std::numeric_limits<double>::infinity();
      }
      if (trial_area <= area + opts.armijo * step * slope) {
        accepted = true;
        break;
      }
      // area differences at roundoff level: accept on a smaller gradient instead
      if (std::abs(trial_area - area) <= 1e-13 * (1.0 + std::abs(area))) {
        Eigen::VectorXd tg;
        discrete_graph_area(space, mesh, trial, &tg);
        if (restrict_vec(tg).lpNorm<Eigen::Infinity>() < rep.gradient_norm) {
          accepted = true;
          break;
        }
      }
      ++rep.backtracks;
      step *= opts.backtrack;
    }
    if (!accepted) break;  // no further decrease representable
    z = trial;
    area = discrete_graph_area(space, mesh, z, &grad, &hess);
    gf = restrict_vec(grad);
    rep.gradient_norm = gf.lpNorm<Eigen::Infinity>();
  }
  rep.area = area;
  rep.converged = rep.gradient_norm <= opts.tolerance;

  rep.max_principle_excess = 0.0;
  if (std::isfinite(lo))
    for (int i : free_dofs) rep.max_principle_excess = std::max({rep.max_principle_excess, z[i] - hi, lo - z[i]});

  sol.graph = DiscreteGraph{space.params(), mesh, z};
  const auto adj = adjacency(mesh);
  const auto nodes = smooth_with(mesh, adj);
  double sum = 0.0;
  for (int i : nodes) {
    const double r = std::abs(mce_residual(space, fit_with(adj, sol.graph, i), mesh.pos[i]));
    rep.mce_max = std::max(rep.mce_max, r);
    sum += r * r;
  }
  rep.mce_nodes = nodes.size();
  rep.mce_rms = nodes.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(nodes.size()));
  return sol;
}

Solution solve_contour(const Contour& contour, const SolverOptions& opts) {
  const BoundaryData bd = boundary_heights(contour);
  const Space space(contour.space);
  const auto pieces = polygon_pieces(space.base(), bd.polygon);
  const int level = level_for(space.base(), pieces, opts.h) + opts.extra_levels;
  std::vector<double> dirichlet;
  const Mesh mesh = with_boundary(mesh_from_pieces(space.base(), pieces, level), bd, dirichlet);
  return solve_graph(space, mesh, dirichlet, opts);
}

RefinementStudy refinement_study(const Contour& contour, const SolverOptions& opts, int refinements) {
  if (refinements < 1) throw DomainError("need at least one refinement");
  const BoundaryData bd = boundary_heights(contour);
  const Space space(contour.space);
  const auto pieces = polygon_pieces(space.base(), bd.polygon);
  const int level0 = level_for(space.base(), pieces, opts.h) + opts.extra_levels;
  RefinementStudy st;
  std::vector<int> k;
  for (int r = 0; r <= refinements; ++r) {
    std::vector<double> dirichlet;
    const Mesh mesh = with_boundary(mesh_from_pieces(space.base(), pieces, level0 + r), bd, dirichlet);
    const Solution sol = solve_graph(space, mesh, dirichlet, opts);
    const auto adj = adjacency(mesh);
    if (r == 0) k = smooth_with(mesh, adj);
    if (k.empty()) throw DomainError("no smooth interior nodes at this mesh size");
    double mx = 0.0, sum = 0.0;
    for (int i : k) {
      const double v = std::abs(mce_residual(space, fit_with(adj, sol.graph, i), mesh.pos[i]));
      mx = std::max(mx, v);
      sum += v * v;
    }
    st.levels.push_back(level0 + r);
    st.mce_max.push_back(mx);
    st.mce_rms.push_back(std::sqrt(sum / static_cast<double>(k.size())));
    st.solves.push_back(sol.report);
    if (r > 0) st.orders.push_back(std::log2(st.mce_max[r - 1] / mx));
  }
  st.nodes = k.size();
  return st;
}

GraphJet fit_jet(const DiscreteGraph& g, int dof) {
  if (dof < 0 || dof >= g.mesh.nodes) throw DomainError("not a geometric node");
  return fit_with(adjacency(g.mesh), g, dof);
}

std::vector<int> smooth_nodes(const Mesh& mesh) { return smooth_with(mesh, adjacency(mesh)); }

double mce_residual(const DiscreteGraph& g, int dof) {
  const Space space(g.space);
  return mce_residual(space, fit_jet(g, dof), g.mesh.pos[dof]);
}

TangencyReport vertical_tangency_check(const DiscreteGraph& g, double cap) {
  const Space space(g.space);
  TangencyReport rep;
  bool finite = true;
  for (const auto& t : g.mesh.tris) {
    const Vec2 &p0 = g.mesh.chart[t[0]], &p1 = g.mesh.chart[t[1]], &p2 = g.mesh.chart[t[2]];
    const double a2 = cross(p1 - p0, p2 - p0);
    if (!(a2 > 0.0)) {
      ++rep.inverted;
      continue;
    }
    if (g.mesh.jump[t[0]] || g.mesh.jump[t[1]] || g.mesh.jump[t[2]]) continue;
    const TriGeom geo = tri_geom(g.mesh, t);
    const Vec2 k = (p0 + p1 + p2) / 3.0;
    const Vec2 c = from_chart(space.base(), k);
    const Mat2 jac = chart_jacobian(space.base(), k);
    const Vec3 th = space.theta(c);
    const Vec2 v = tri_gradient(geo, t, g.z) + jac.transpose() * Vec2(th.x(), th.y());
    const double slope = std::sqrt(v.dot((jac.transpose() * jac).inverse() * v)) / space.base().conformal(c);
    if (!std::isfinite(slope)) {
      finite = false;
      continue;
    }
    if (slope > rep.max_slope) {
      rep.max_slope = slope;
      rep.where = c;
    }
  }
  rep.ok = finite && rep.inverted == 0 && rep.max_slope <= cap;
  return rep;
}

FanProfile fan_profile(const DiscreteGraph& g, int corner) {
  const Base base(g.space.kappa_e());
  std::vector<std::pair<double, double>> items;
  for (std::size_t d = 0; d < g.mesh.dofs(); ++d) {
    if (g.mesh.corner[d] != corner) continue;
    for (const auto& t : g.mesh.tris) {
      if (t[0] != static_cast<int>(d) && t[1] != static_cast<int>(d) && t[2] != static_cast<int>(d)) continue;
      const Vec2 c = (g.mesh.pos[t[0]] + g.mesh.pos[t[1]] + g.mesh.pos[t[2]]) / 3.0;
      items.emplace_back(base.heading(g.mesh.pos[d], c), g.z[d]);
    }
  }
  if (items.empty()) throw DomainError("corner has no dofs");
  std::sort(items.begin(), items.end());
  // start after the widest angular gap (the exterior of the corner)
  std::size_t start = 0;
  double widest = -1.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double next = i + 1 < items.size() ? items[i + 1].first : items[0].first + 2.0 * M_PI;
    if (next - items[i].first > widest) {
      widest = next - items[i].first;
      start = (i + 1) % items.size();
    }
  }
  FanProfile fp;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < items.size(); ++k) {
    double a = items[(start + k) % items.size()].first;
    while (a < prev) a += 2.0 * M_PI;
    prev = a;
    fp.angle.push_back(a);
    fp.height.push_back(items[(start + k) % items.size()].second);
  }
  return fp;
}

std::optional<Barrier> edge_barrier(const SpaceParams& space, const Vec2& p, const Vec2& q,
                                    const Vec2& inside, const std::vector<Vec2>& domain) {
  space.validate();
  const Base base(space.kappa_e());
  const double h = base.heading(p, q);
  const double side = base.side(p, h, inside);
  if (side == 0.0) throw DomainError("reference point lies on the barrier geodesic");
  switch (space.model()) {
    case Model::HalfPlane: {
      auto s = std::make_shared<ScherkBarrier>(space, p, h, side > 0.0);
      return Barrier{[s](const Vec2& x) { return (*s)(x); }, 0.0, "scherk"};
    }
    case Model::Heisenberg:
      return std::nullopt;
    case Model::Euclidean: {
      const double heading = side > 0.0 ? h : h + M_PI;
      const Vec2 dir(std::cos(heading), std::sin(heading));
      const Vec2 nrm(-dir.y(), dir.x());
      double t_min = std::numeric_limits<double>::infinity(), n_max = 0.0;
      for (const auto& x : domain) {
        t_min = std::min(t_min, (x - p).dot(dir));
        n_max = std::max(n_max, (x - p).dot(nrm));
      }
      t_min = std::min(t_min, (inside - p).dot(dir));
      n_max = std::max(n_max, (inside - p).dot(nrm));
      auto s = std::make_shared<HelicoidBarrier>(p, heading, t_min - 1.0, n_max);
      return Barrier{[s](const Vec2& x) { return (*s)(x); }, 0.0, "helicoid"};
    }
  }
  return std::nullopt;
}

double barrier_shift(const Barrier& b, const std::vector<Vec2>& pos, const std::vector<double>& z) {
  if (pos.size() != z.size()) throw DomainError("anchor sizes differ");
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double f = b.f(pos[i]);
    if (std::isfinite(f)) shift = std::max(shift, z[i] - f);
  }
  return std::isfinite(shift) ? shift : 0.0;
}

namespace {

BarrierReport dominate(const Barrier& b, const std::vector<Vec2>& pos, const std::vector<double>& z) {
  BarrierReport rep;
  rep.kind = b.kind;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double f = b.f(pos[i]);
    if (!std::isfinite(f)) continue;
    rep.min_gap = std::min(rep.min_gap, f + b.shift - z[i]);
    ++rep.checked;
  }
  rep.dominated = rep.min_gap >= -1e-8;
  return rep;
}

using Key = std::pair<double, double>;
Key key(const Vec2& p) { return {p.x(), p.y()}; }

}  // namespace

LadderReport convergence_ladder(const NoidSpec& spec, const std::vector<double>& truncations,
                                const SolverOptions& opts) {
  if (truncations.empty()) throw DomainError("empty truncation list");
  for (std::size_t i = 1; i < truncations.size(); ++i)
    if (!(truncations[i] > truncations[i - 1])) throw DomainError("truncations must increase");
  LadderReport rep;
  rep.family = spec.family;
  rep.truncations = truncations;
  const Space space(spec.space);
  const Base& base = space.base();

  // All rungs share the inner domain D (truncated at half the first truncation); each rung adds
  // its own outer pieces, so the meshes coincide on D.
  auto polygon_at = [&](double t) {
    NoidSpec s = spec;
    s.truncation = t;
    s.validate();
    return spec.family == Family::Knoid ? knoid_triangle(s).vertices : noid2k_quad(s).vertices;
  };
  const std::vector<Vec2> inner = polygon_at(0.5 * truncations.front());
  std::vector<std::array<Vec2, 3>> core;
  if (spec.family == Family::Knoid) {
    core.push_back({inner[0], inner[1], inner[2]});
  } else {
    core.push_back({inner[0], inner[1], inner[2]});
    core.push_back({inner[0], inner[2], inner[3]});
  }
  std::vector<std::vector<Vec2>> poly;
  std::vector<std::vector<std::array<Vec2, 3>>> pieces;
  int level = 0;
  for (double t : truncations) {
    poly.push_back(polygon_at(t));
    const auto& p = poly.back();
    auto pc = core;
    if (spec.family == Family::Knoid) {
      pc.push_back({p[0], inner[2], p[2]});
    } else {
      pc.push_back({p[2], inner[1], p[1]});
      pc.push_back({p[2], p[3], inner[3]});
    }
    level = std::max(level, level_for(base, pc, opts.h));
    pieces.push_back(std::move(pc));
  }
  level += opts.extra_levels;

  // chart test for the inner domain
  auto in_core = [&](const Vec2& w) {
    for (const auto& pc : core) {
      const Vec2 a = to_chart(base, pc[0]), b = to_chart(base, pc[1]), c = to_chart(base, pc[2]);
      const double s0 = cross(b - a, w - a), s1 = cross(c - b, w - b), s2 = cross(a - c, w - c);
      if ((s0 > 0.0 && s1 > 0.0 && s2 > 0.0) || (s0 < 0.0 && s1 < 0.0 && s2 < 0.0)) return true;
    }
    return false;
  };
  std::map<Key, int> core_index;  // inner-domain position -> node of the first rung
  std::vector<Vec2> k_pos;
  for (std::size_t j = 0; j < truncations.size(); ++j) {
    NoidSpec s = spec;
    s.truncation = truncations[j];
    const Contour c = spec.family == Family::Knoid ? knoid_contour(s) : noid2k_contour(s);
    const BoundaryData bd = boundary_heights(c);
    std::vector<double> dirichlet;
    const Mesh mesh = with_boundary(mesh_from_pieces(base, pieces[j], level), bd, dirichlet);
    const Solution sol = solve_graph(space, mesh, dirichlet, opts);
    rep.solves.push_back(sol.report);
    rep.areas.push_back(sol.report.area);
    const auto& m = sol.graph.mesh;
    const auto& z = sol.graph.z;

    std::map<Key, int> here;
    for (int i = 0; i < m.nodes; ++i) here.emplace(key(m.pos[i]), i);
    if (j == 0) {
      for (const auto& t : m.tris) {
        if (!in_core((m.chart[t[0]] + m.chart[t[1]] + m.chart[t[2]]) / 3.0)) continue;
        for (int v : t) core_index.emplace(key(m.pos[m.node[v]]), m.node[v]);
      }
      for (const auto& [p, i] : core_index) {
        if (m.boundary[i]) continue;
        rep.k_nodes.push_back(i);
        k_pos.push_back(m.pos[i]);
      }
    }
    std::vector<double> hk;
    for (const Vec2& p : k_pos) {
      const auto it = here.find(key(p));
      if (it == here.end() || m.boundary[it->second]) throw NumericalError("ladder meshes are not nested");
      hk.push_back(z[it->second]);
    }
    rep.heights.push_back(hk);

    // barrier over the inner domain (k-noid) or over the whole rung (2k-noid)
    std::optional<Barrier> bar;
    std::vector<Vec2> anchor_pos, check_pos;
    std::vector<double> anchor_z, check_z;
    if (spec.family == Family::Knoid) {
      bar = edge_barrier(spec.space, inner[0], inner[2], inner[1], inner);  // gamma of D, inside O
      for (std::size_t d = 0; d < m.dofs(); ++d) {
        if (!core_index.count(key(m.pos[d]))) continue;
        check_pos.push_back(m.pos[d]);
        check_z.push_back(z[d]);
        if (m.fixed[d]) {
          anchor_pos.push_back(m.pos[d]);
          anchor_z.push_back(z[d]);
        }
      }
    } else {
      const auto& q = poly[j];  // p1, E_a, p^, E_b
      bar = edge_barrier(spec.space, q[0], q[1], q[2], q);
      for (std::size_t d = 0; d < m.dofs(); ++d) {
        check_pos.push_back(m.pos[d]);
        check_z.push_back(z[d]);
        if (m.fixed[d]) {
          anchor_pos.push_back(m.pos[d]);
          anchor_z.push_back(z[d]);
        }
      }
    }
    if (bar) {
      bar->shift = barrier_shift(*bar, anchor_pos, anchor_z);
      rep.barriers.push_back(dominate(*bar, check_pos, check_z));
    } else {
      BarrierReport none;
      none.kind = "none";
      none.dominated = true;
      rep.barriers.push_back(none);
    }
  }

  for (std::size_t j = 0; j + 1 < rep.heights.size(); ++j) {
    double sup = 0.0;
    for (std::size_t i = 0; i < rep.k_nodes.size(); ++i) {
      const double d = rep.heights[j + 1][i] - rep.heights[j][i];
      sup = std::max(sup, std::abs(d));
      rep.worst_nondecreasing = std::max(rep.worst_nondecreasing, -d);
      rep.worst_nonincreasing = std::max(rep.worst_nonincreasing, d);
    }
    rep.sup_differences.push_back(sup);
  }
  constexpr double slack = 1e-8;
  for (std::size_t i = 0; i < rep.k_nodes.size(); ++i) {
    double down = 0.0, up = 0.0;
    for (std::size_t j = 0; j + 1 < rep.heights.size(); ++j) {
      const double d = rep.heights[j + 1][i] - rep.heights[j][i];
      down = std::max(down, -d);
      up = std::max(up, d);
    }
    rep.worst_nodewise = std::max(rep.worst_nodewise, std::min(down, up));
  }
  rep.nodewise_monotone = rep.worst_nodewise <= slack;
  rep.direction = rep.worst_nondecreasing <= slack ? 1 : rep.worst_nonincreasing <= slack ? -1 : 0;
  rep.differences_decreasing = true;
  for (std::size_t j = 1; j < rep.sup_differences.size(); ++j)
    if (!(rep.sup_differences[j] < rep.sup_differences[j - 1])) rep.differences_decreasing = false;

  rep.limit = rep.heights.back();
  const std::size_t r = rep.heights.size();
  if (r >= 3) {
    for (std::size_t i = 0; i < rep.k_nodes.size(); ++i) {
      const double d1 = rep.heights[r - 2][i] - rep.heights[r - 3][i];
      const double d2 = rep.heights[r - 1][i] - rep.heights[r - 2][i];
      if (d1 != 0.0 && std::abs(d2) < std::abs(d1) && d1 * d2 > 0.0) {
        const double q = d2 / d1;
        rep.limit[i] += d2 * q / (1.0 - q);
      }
    }
  }
  return rep;
}

Patch3 graph_patch(const DiscreteGraph& g) {
  Patch3 p;
  for (std::size_t i = 0; i < g.mesh.dofs(); ++i) p.points.emplace_back(g.mesh.pos[i].x(), g.mesh.pos[i].y(), g.z[i]);
  p.tris = g.mesh.tris;
  return p;
}

Isometry edge_rotation(const BoundaryData& bd, EdgeKind kind, int index) {
  const Space space(bd.space);
  const int n = static_cast<int>(bd.size());
  if (index < 0 || index >= n) throw DomainError("edge index out of range");
  if (kind == EdgeKind::Horizontal) {
    const Vec2 p = bd.polygon[index], q = bd.polygon[(index + 1) % n];
    const Vec3 a(p.x(), p.y(), bd.start_height[index]);
    return Isometry::half_turn(space, a, space.base().heading(p, q));
  }
  if (!bd.jump[index]) throw DomainError("no vertical boundary geodesic at this corner");
  return Isometry::rotation_about_fiber(space, bd.polygon[index], M_PI);
}

Patch3 reflect_extend(const DiscreteGraph& g, const BoundaryData& bd, EdgeKind kind, int index) {
  const Isometry iso = edge_rotation(bd, kind, index);
  Patch3 p = graph_patch(g);
  for (auto& x : p.points) x = iso(x);
  return p;
}

}  // namespace noids
