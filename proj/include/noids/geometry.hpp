#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace noids {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Model { HalfPlane, Heisenberg, Euclidean };

std::string model_name(Model m);

// (kappa, H) of the CMC side; the minimal side lives in E(kappa + 4H^2, H).
struct SpaceParams {
  double kappa = -1.0;
  double h_mean = 0.0;

  double kappa_e() const;
  double tau() const { return h_mean; }
  Model model() const;
  void validate() const;
};

// Simply connected space form of curvature kappa <= 0.
// Hyperbolic case: upper half-plane chart, conformal factor 1/(m y), m = sqrt(-kappa).
// Flat case: Cartesian chart.
class Base {
 public:
  explicit Base(double kappa);

  double curvature() const { return kappa_; }
  bool hyperbolic() const { return kappa_ < 0.0; }
  double m() const { return m_; }
  Vec2 origin() const;

  double conformal(const Vec2& p) const;
  bool contains(const Vec2& p) const;
  void check(const Vec2& p) const;

  double distance(const Vec2& p, const Vec2& q) const;
  // Chart angle of the geodesic p -> q at p, and at q.
  double heading(const Vec2& p, const Vec2& q) const;
  double arrival_heading(const Vec2& p, const Vec2& q) const;
  Vec2 shoot(const Vec2& p, double heading, double length, double* end_heading = nullptr) const;
  Vec2 along(const Vec2& p, const Vec2& q, double t) const;
  // Unsigned angle in [0, pi] at vertex between the geodesics to a and b.
  double angle(const Vec2& vertex, const Vec2& a, const Vec2& b) const;
  // Signed side of point x relative to the oriented geodesic through p with heading h:
  // positive on the left.
  double side(const Vec2& p, double h, const Vec2& x) const;

 private:
  double kappa_;
  double m_;
};

double wrap_angle(double a);

struct BaseCurve {
  std::function<Vec2(double)> pos;
  std::function<Vec2(double)> vel;
  double t0 = 0.0;
  double t1 = 1.0;
  int pieces = 1;  // smooth on each of this many equal parameter intervals
};

BaseCurve geodesic_path(const Base& base, const std::vector<Vec2>& vertices, bool closed);

struct CurveSample {
  std::vector<double> params;
  std::vector<Vec3> points;
  std::vector<Vec3> tangent;
  std::vector<Vec3> normal;
  std::vector<Vec3> conormal;
  std::vector<double> curvature;
  std::vector<double> torsion;
  std::vector<double> twist_rate;

  std::size_t size() const { return points.size(); }
};

class Space {
 public:
  explicit Space(const SpaceParams& params);

  const SpaceParams& params() const { return params_; }
  Model model() const { return model_; }
  const Base& base() const { return base_; }
  double tau() const { return params_.h_mean; }

  void check(const Vec3& p) const;
  // Connection form theta = theta_x dx + theta_y dy + dz; g = sigma^2 (dx^2+dy^2) + theta^2.
  Vec3 theta(const Vec2& p) const;
  Mat3 metric(const Vec3& p) const;
  // dg[l] = d g / d x^l
  std::array<Mat3, 3> metric_derivatives(const Vec3& p) const;
  // gamma[k](i, j) = Gamma^k_ij
  std::array<Mat3, 3> christoffels(const Vec3& p) const;

  // Height change along the horizontal lift of the base geodesic p -> q.
  double lift_step(const Vec2& p, const Vec2& q) const;
  // Point of the horizontal lift of the base geodesic start -> q at fraction t.
  Vec3 lift_along(const Vec3& start, const Vec2& q, double t) const;
  // Horizontal geodesic from start with base heading h, at arc length s.
  Vec3 horizontal_ray(const Vec3& start, double heading, double s) const;
  // Chart velocity of the horizontal unit vector with base heading h at p.
  Vec3 horizontal_vector(const Vec3& p, double heading) const;
  // Height of the horizontal umbrella centred at c above base point q.
  double umbrella_height(const Vec3& c, const Vec2& q) const;

  double norm(const Vec3& p, const Vec3& v) const;
  double inner(const Vec3& p, const Vec3& a, const Vec3& b) const;

 private:
  SpaceParams params_;
  Model model_;
  Base base_;
};

Mat3 metric_at(const Space& space, const Vec3& p);
std::array<Mat3, 3> christoffels(const Space& space, const Vec3& p);

// Unit-speed geodesic of the given length; samples at steps+1 equally spaced arc lengths.
CurveSample geodesic(const Space& space, const Vec3& p, const Vec3& v, double length, int steps);

// Horizontal lift of a base curve, sampled at `samples`+1 equally spaced parameters.
CurveSample horizontal_lift(const Space& space, const BaseCurve& curve, double start_height,
                            int samples = 64);
// End height minus start height of the horizontal lift.
double lift_rise(const Space& space, const BaseCurve& curve);

struct BasePolygon {
  std::vector<Vec2> vertices;
  std::vector<double> side_lengths;     // side i joins vertex i and i+1
  std::vector<double> interior_angles;  // at vertex i
  double oriented_area = 0.0;           // positive for clockwise chart loops
  double kappa_base = 0.0;
};

// Oriented area by boundary quadrature (Green's formula along the geodesic sides).
double oriented_area_numeric(const Base& base, const std::vector<Vec2>& vertices);
BasePolygon make_polygon(const Base& base, const std::vector<Vec2>& vertices);

// lengths.size() == angles.size() + 1: open geodesic polyline closed by a geodesic.
// lengths.empty() && angles.size() == 3: triangle with prescribed angles (kappa < 0).
BasePolygon base_polygon_from_hinge(double kappa_base, const std::vector<double>& lengths,
                                    const std::vector<double>& angles);

using PatchFn = std::function<Vec3(double, double)>;

struct SurfacePatch {
  PatchFn eval;
  double u0 = 0.0, u1 = 1.0, v0 = 0.0, v1 = 1.0;
  Vec3 operator()(double u, double v) const { return eval(u, v); }
};

// Mean curvature with respect to the unit normal along g^{-1}(f_u x f_v).
double mean_curvature(const Space& space, const PatchFn& patch, double u, double v,
                      double step = 1e-3);

class BaseIsometry {
 public:
  static BaseIsometry identity(const Base& base);
  // Orientation preserving; maps p to q and heading hp at p to heading hq at q.
  static BaseIsometry moving(const Base& base, const Vec2& p, double hp, const Vec2& q, double hq);
  static BaseIsometry rotation(const Base& base, const Vec2& c, double angle);
  static BaseIsometry reflection(const Base& base, const Vec2& p, double heading);

  Vec2 operator()(const Vec2& p) const;
  BaseIsometry compose(const BaseIsometry& inner) const;  // this o inner
  BaseIsometry inverse() const;
  bool reversing() const { return flip_; }

 private:
  bool hyperbolic_ = false;
  Mat2 a_ = Mat2::Identity();  // Moebius matrix or linear part
  Vec2 b_ = Vec2::Zero();      // translation (flat case)
  bool flip_ = false;          // precompose with x -> -x
};

// Isometry of the total space covering a base isometry: (p, z) -> (T p, s z + f(p)).
class Isometry {
 public:
  static Isometry identity(const Space& space);
  static Isometry vertical_translation(const Space& space, double c);
  static Isometry moving(const Space& space, const Vec3& p, double hp, const Vec3& q, double hq);
  static Isometry rotation_about_fiber(const Space& space, const Vec2& c, double angle);
  // pi-rotation about the horizontal geodesic through a with base heading h.
  static Isometry half_turn(const Space& space, const Vec3& a, double heading);

  Vec3 operator()(const Vec3& p) const;
  Isometry compose(const Isometry& inner) const;  // this o inner
  Isometry inverse() const;
  Vec2 base_map(const Vec2& p) const;
  int fiber_sign() const;

 private:
  struct Piece {
    BaseIsometry t;
    int s = 1;
    Vec2 ref = Vec2::Zero();
    double f_ref = 0.0;
    bool inverted = false;
  };
  Vec3 apply(const Piece& pc, const Vec3& p) const;
  Space space_{SpaceParams{}};
  std::vector<Piece> pieces_;  // applied front to back
};

}  // namespace noids
