#pragma once

#include "noids/contours.hpp"
#include "noids/geometry.hpp"
#include "noids/reference.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace noids {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Triangle mesh over a base polygon. Every geometric node carries one height (dof); a node at
// a jump corner carries one extra dof per incident triangle beyond the first.
struct Mesh {
  std::vector<Vec2> pos;                  // base chart position per dof
  std::vector<Vec2> chart;                // meshing chart position per dof
  std::vector<std::array<int, 3>> tris;   // dofs, counterclockwise in the meshing chart
  std::vector<int> node;                  // geometric node per dof
  std::vector<bool> fixed;                // Dirichlet dof
  std::vector<bool> boundary;             // node on the polygon boundary
  std::vector<int> corner;                // polygon corner index of the node, or -1
  std::vector<bool> jump;                 // dof sits at a jump corner
  int level = 0;
  int nodes = 0;                          // dofs [0, nodes) are the geometric nodes

  std::size_t dofs() const { return pos.size(); }
  std::size_t size() const { return tris.size(); }
};

// Meshing chart, in which base geodesics are straight: the Klein disc for hyperbolic bases,
// the base chart itself otherwise. Heights are piecewise linear in this chart.
Vec2 to_chart(const Base& base, const Vec2& p);
Vec2 from_chart(const Base& base, const Vec2& k);
Eigen::Matrix2d chart_jacobian(const Base& base, const Vec2& k);   // d(base) / d(chart)

// Ear-clipped triangulation of a simple polygon with geodesic sides.
std::vector<std::array<Vec2, 3>> polygon_pieces(const Base& base, const std::vector<Vec2>& polygon);
// Geodesic triangles split into six right triangles around an interior point, then refined
// `level` times by 4-splitting at geodesic midpoints.
Mesh mesh_from_pieces(const Base& base, const std::vector<std::array<Vec2, 3>>& pieces, int level);
// Ear-clipped polygon, refined until every edge is at most h long in the base metric.
Mesh triangulate(const Base& base, const std::vector<Vec2>& polygon, double h);
Mesh triangulate(const BasePolygon& polygon, double h);
// Level needed so that every edge of mesh_from_pieces is at most h long.
int level_for(const Base& base, const std::vector<std::array<Vec2, 3>>& pieces, double h);
double max_edge_length(const Base& base, const Mesh& mesh);

// Attach Dirichlet data: boundary nodes take the lifted edge heights; jump corners split into
// one dof per incident triangle, the two triangles on the boundary sides taking the one-sided
// traces and the others free.
Mesh with_boundary(Mesh mesh, const BoundaryData& bd, std::vector<double>& dirichlet);

// Graph area over the PL heights with a 7-point rule per triangle.
double discrete_graph_area(const Space& space, const Mesh& mesh, const std::vector<double>& z,
                           Eigen::VectorXd* grad = nullptr, SparseMatrix* hess = nullptr);

struct SolverOptions {
  double h = 0.25;
  double tolerance = 1e-10;   // on the free gradient norm
  int max_iterations = 200;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  int extra_levels = 0;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  int backtracks = 0;
  int gradient_steps = 0;
  double area = 0.0;
  double gradient_norm = 0.0;
  double max_principle_excess = 0.0;   // > 0 when an interior height leaves the boundary range
  double mce_max = 0.0;
  double mce_rms = 0.0;
  std::size_t mce_nodes = 0;
};

struct DiscreteGraph {
  SpaceParams space;
  Mesh mesh;
  std::vector<double> z;
};

struct Solution {
  DiscreteGraph graph;
  SolveReport report;
};

Solution solve_graph(const Space& space, const Mesh& mesh, const std::vector<double>& dirichlet,
                     const SolverOptions& opts = {});
// Contour -> mesh -> solve.
Solution solve_contour(const Contour& contour, const SolverOptions& opts = {});

// Cubic least-squares fit over the 2-ring (or wider) of a geometric node.
GraphJet fit_jet(const DiscreteGraph& g, int dof);
// Interior nodes whose fitting neighbourhood avoids the boundary and the coarse-triangle edges.
std::vector<int> smooth_nodes(const Mesh& mesh);
double mce_residual(const DiscreteGraph& g, int dof);

// Solves at the level chosen by opts.h and at `refinements` further uniform refinements; the
// residual is tracked on the smooth nodes of the coarsest mesh, whose ids persist.
struct RefinementStudy {
  std::vector<int> levels;
  std::vector<double> mce_max;     // over the persistent smooth nodes
  std::vector<double> mce_rms;
  std::vector<double> orders;      // log2 of successive mce_max ratios
  std::size_t nodes = 0;
  std::vector<SolveReport> solves;
};
RefinementStudy refinement_study(const Contour& contour, const SolverOptions& opts = {}, int refinements = 2);

struct TangencyReport {
  bool ok = false;
  double max_slope = 0.0;        // metric slope of the graph, away from jump dofs
  Vec2 where = Vec2::Zero();
  int inverted = 0;              // triangles with non-positive chart orientation
};
TangencyReport vertical_tangency_check(const DiscreteGraph& g, double cap = 1e4);

// Heights of the fan dofs at a jump corner, ordered by the direction of their triangle.
struct FanProfile {
  std::vector<double> angle;   // base heading of the triangle's bisector at the corner
  std::vector<double> height;
};
FanProfile fan_profile(const DiscreteGraph& g, int corner);

struct Barrier {
  std::function<double(const Vec2&)> f;
  double shift = 0.0;
  std::string kind;
};
// Scherk graph (hyperbolic) or horizontal-axis helicoid (Euclidean) diverging on the geodesic
// through p and q, finite on the side of `inside`. Returns nullopt in the Heisenberg model.
std::optional<Barrier> edge_barrier(const SpaceParams& space, const Vec2& p, const Vec2& q,
                                    const Vec2& inside, const std::vector<Vec2>& domain);
// Largest shift so that the barrier lies above the given anchor heights.
double barrier_shift(const Barrier& b, const std::vector<Vec2>& pos, const std::vector<double>& z);

struct BarrierReport {
  bool dominated = false;
  double min_gap = 0.0;   // min of barrier + shift - z over checked dofs
  std::size_t checked = 0;
  std::string kind;
};

struct LadderReport {
  Family family = Family::Knoid;
  std::vector<double> truncations;
  std::vector<int> k_nodes;                          // free nodes of the shared inner mesh
  std::vector<std::vector<double>> heights;          // per rung, on K
  std::vector<double> sup_differences;               // max_K |u_{j+1} - u_j|
  int direction = 0;                                 // +1 nondecreasing, -1 nonincreasing, 0 neither
  double worst_nondecreasing = 0.0;                  // max_K (u_j - u_{j+1})
  double worst_nonincreasing = 0.0;                  // max_K (u_{j+1} - u_j)
  double worst_nodewise = 0.0;                        // max_K of the smaller direction violation
  bool nodewise_monotone = false;                    // every node's sequence is monotone
  bool differences_decreasing = false;
  std::vector<double> limit;                         // extrapolated heights on K
  std::vector<SolveReport> solves;
  std::vector<BarrierReport> barriers;
  std::vector<double> areas;
};
LadderReport convergence_ladder(const NoidSpec& spec, const std::vector<double>& truncations,
                                const SolverOptions& opts = {});

struct Patch3 {
  std::vector<Vec3> points;
  std::vector<std::array<int, 3>> tris;
};
Patch3 graph_patch(const DiscreteGraph& g);
// pi-rotation about the lift of boundary edge i (horizontal) or about the fibre over
// corner i (vertical) applied to the surface.
enum class EdgeKind { Horizontal, Vertical };
Patch3 reflect_extend(const DiscreteGraph& g, const BoundaryData& bd, EdgeKind kind, int index);
Isometry edge_rotation(const BoundaryData& bd, EdgeKind kind, int index);

}  // namespace noids
