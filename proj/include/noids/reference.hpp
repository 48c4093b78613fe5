#pragma once

#include "noids/geometry.hpp"

#include <limits>

namespace noids {

// Second-order jet of a height function z = u(x, y) at a chart point.
struct GraphJet {
  double u = 0.0, ux = 0.0, uy = 0.0, uxx = 0.0, uxy = 0.0, uyy = 0.0;
};

// Minimal-graph residual at p.
// Half-plane model: 2w(u_xx+u_yy) - ((2H/(y m^2) + u_x) w_x + u_y w_y),
//   w = 1 + (u_x/lambda + 2H lambda y)^2 + (u_y/lambda)^2, m^2 = -(kappa + 4H^2).
// Flat base models: divergence form of the area integrand multiplied by S^3,
//   S^2 = 1 + (theta_x + u_x)^2 + (theta_y + u_y)^2.
double mce_residual(const Space& space, const GraphJet& jet, const Vec2& p);

struct ScherkParams {
  SpaceParams space;
  int sign = 1;  // +1: u >= 0 and u -> +inf at s = pi/2; -1: the other root
};

// Rotational solution u(s), s the polar angle in the half-plane chart, s in [0, pi/2).
double scherk_height(const ScherkParams& prm, double s);
double scherk_slope(const ScherkParams& prm, double s);
double scherk_curvature(const ScherkParams& prm, double s);  // u''(s)
// w restricted to u = u(s), from the Cartesian definition.
double scherk_w(const ScherkParams& prm, double s);
// (2H + (4H^2+kappa) u')^2 / w - c with c = -(4H^2+kappa).
double scherk_conservation_residual(const ScherkParams& prm, double s);
// Jet of the graph (x, y) -> u(atan2(y, x)) for x > 0.
GraphJet scherk_jet(const ScherkParams& prm, const Vec2& p);

// Scherk graph transported onto the side of a base geodesic; infinite on the geodesic.
class ScherkBarrier {
 public:
  // The graph diverges along the geodesic through p with heading h and is finite on its
  // left (left = true) or right side.
  ScherkBarrier(const SpaceParams& space, const Vec2& p, double heading, bool left, int sign = 1);

  // Height over q; +inf (sign +1) on the closed far side.
  double operator()(const Vec2& q) const;
  double offset = 0.0;

 private:
  ScherkParams prm_;
  Space space_;
  Isometry to_standard_;
  Isometry from_standard_;
};

// Horizontal-axis helicoid z = x' tan(y'/b) in the Euclidean model, written in a frame where
// the divergence line is the geodesic through p with heading h and the finite side is on the left.
class HelicoidBarrier {
 public:
  HelicoidBarrier(const Vec2& p, double heading, double axis_offset, double width);
  double operator()(const Vec2& q) const;
  double offset = 0.0;

 private:
  Vec2 p_;
  double h_, axis_, b_;
};

SurfacePatch vertical_plane(const Space& space, const Vec2& p, double heading, double half_length,
                            double half_height);
SurfacePatch umbrella_patch(const Space& space, const Vec3& centre, double radius);
SurfacePatch slice_patch(const Space& space, const Vec3& a, double heading, double half_length,
                         double half_width);
// Vertical helicoid M(s) about the fibre through centre: the ruling at fibre height
// z_c + v has base heading heading0 + (s - tau) v. Infinite s gives the umbrella.
SurfacePatch helicoid_patch(const Space& space, double pitch, double radius, double half_height,
                            const Vec3& centre, double heading0 = 0.0);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace noids
