#pragma once

#include "noids/contours.hpp"
#include "noids/solver.hpp"

#include <vector>

namespace noids {

struct SisterRelations {
  double H = 0.0;
  double k_tilde = 0.0;
  double t_tilde = 0.0;
};
// Normal curvature and torsion of the sister curve.
SisterRelations sister_curvature(double H, double k, double t);

// Twist of the normal along the vertical arc over a jump corner. The arc is traversed with the
// domain on the left of the chart and the rotation is measured clockwise in the chart against
// a basic field (the lift of a fixed base vector), so a graph with monotone heights around the
// corner has alpha' > 0.
struct TwistProfile {
  int corner = -1;
  Vec2 base_point = Vec2::Zero();
  double H = 0.0;
  double radius = 0.0;           // geodesic circle on which the level directions are read
  double u_start = 0.0, u_end = 0.0;
  double opening = 0.0;          // interior angle of the corner = total twist
  std::vector<double> s;         // arc length from the start trace
  std::vector<double> alpha;
  std::vector<double> rate;      // alpha'
  std::vector<double> torsion;   // alpha' - H
  bool monotone = false;         // heights strictly monotone along the circle

  double length() const { return s.empty() ? 0.0 : s.back(); }
  double min_rate() const;
};

struct TwistOptions {
  int samples = 65;        // points of the arc-length grid
  int circle = 2048;       // points on the circle
  double radius = 0.0;     // 0: eight longest mesh edges, capped by the polygon sides
};

// Vertical arcs are the jump corners of bd; `corner` indexes bd.polygon.
TwistProfile twist_along_vertical(const DiscreteGraph& g, const BoundaryData& bd, int corner,
                                  const TwistOptions& opts = {});
std::vector<TwistProfile> contour_twists(const DiscreteGraph& g, const BoundaryData& bd,
                                         const TwistOptions& opts = {});

// Angle between the level direction at height h and the horizontal trace at the zero-height end
// of the arc, as a function of |h| (the half-turn about the trace makes it even). NaN past the arc.
AngleProfile level_angle_profile(const TwistProfile& twist);

// Profile with prescribed rate on a uniform grid of the given length.
TwistProfile twist_from_rate(double H, double length, const std::function<double(double)>& rate,
                             int samples);

// Unit-speed curve in the base of curvature 2H - alpha' (to the left of the chart), starting
// at the base origin with heading 0. Curvature is piecewise linear between profile samples.
CurveSample mirror_curve(double kappa, double H, const TwistProfile& twist, int substeps = 8);

struct SelfIntersection {
  int i = 0, j = 0;         // segment indices, i < j - 1
  double t0 = 0.0, t1 = 0.0;  // curve parameters of the meeting point on each
  Vec2 point = Vec2::Zero();
};
// Sweep over the chart polyline; segments closer than tol meet.
std::vector<SelfIntersection> self_intersections(const CurveSample& curve, double tol = 1e-9);

struct LoopAudit {
  SelfIntersection at;
  double length = 0.0;
  double area = 0.0;             // unsigned area of the enclosed domain
  int orientation = 0;           // +1 counterclockwise in the chart
  double total_curvature = 0.0;  // integral of k~ over the loop
  double corner_angle = 0.0;     // exterior angle at the meeting point
  double residual = 0.0;         // Gauss-Bonnet defect
  double measured_twist = 0.0;   // 2H l - integral of k~
  double forced_twist = 0.0;     // twist implied by Gauss-Bonnet
  bool exceeds_pi = false;
};

enum class LoopVerdict { EmbeddedConsistent, ContradictionFound };

struct LoopReport {
  LoopVerdict verdict = LoopVerdict::EmbeddedConsistent;
  std::vector<LoopAudit> loops;
};
LoopReport gauss_bonnet_loop_check(const CurveSample& curve, double kappa, double H = 0.0,
                                   double tol = 1e-9);

// Twist, mirror curve and loop audit for every vertical arc of a solved contour.
struct SisterAudit {
  std::vector<TwistProfile> twists;
  std::vector<CurveSample> mirrors;
  std::vector<LoopReport> loops;
  double min_rate = 0.0;
  double max_k_tilde = 0.0;
  bool ok = false;   // monotone heights, every rate > 0, every k~ < 2H, no loops
};
SisterAudit sister_audit(const Solution& sol, const Contour& contour, const TwistOptions& opts = {});

}  // namespace noids
