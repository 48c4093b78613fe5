#pragma once

#include "noids/geometry.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace noids {

enum class Family { Knoid, Noid2k };

struct NoidSpec {
  Family family = Family::Knoid;
  SpaceParams space;
  int k = 3;
  double a = 1.0;       // k-noid hinge length
  double d = 1.0;       // 2k-noid diagonal length
  double alpha = 0.0;   // 2k-noid diagonal angle, in (0, pi/(2k)]
  double truncation = 2.0;  // r for k-noids, n for 2k-noids

  double phi() const;
  void validate() const;
};

enum class ArcType { Horizontal, Vertical };

struct Arc {
  ArcType type = ArcType::Horizontal;
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  std::string label;  // label of the start vertex
  CurveSample samples;
};

struct Contour {
  Family family = Family::Knoid;
  SpaceParams space;
  std::vector<Arc> arcs;  // arcs[i].end meets arcs[i + 1].start
  bool closed = true;
  BasePolygon base;       // projected polygon, one vertex per distinct base point
  double c4 = 0.0, c5 = 0.0;

  const Arc& arc(const std::string& start_label) const;
  Vec3 vertex(const std::string& label) const;
  double closure_error() const;
};

BasePolygon knoid_triangle(const NoidSpec& spec);
// Vertices O, P_a, P_a+, P_r, P_r-; O at height 0, vertical edge of length r^2 at P_a.
Contour knoid_contour(const NoidSpec& spec);
// Length of the closing vertical edge at P_r, measured from the sampled lifts.
double knoid_gap(const Contour& c);

// Vertices p1^, E_a, p^, E_b: the edges p1^ E_a and p1^ E_b have length n, the diagonal p1^ p^
// has length d and angle alpha to p1^ E_a.
BasePolygon noid2k_quad(const NoidSpec& spec);
bool is_convex(const BasePolygon& poly);
// Vertices p1..p7 with p1 at height 0. Vertical edges at p3 and p6 have lengths n + c4 and n + c5.
Contour noid2k_contour(const NoidSpec& spec, double c4 = 0.0, double c5 = 0.0);
// Measured d(p5, p4).
double noid2k_gap(const Contour& c);

struct AngleAudit {
  std::vector<std::string> labels;
  std::vector<double> angles;  // between the reversed incoming and the outgoing tangent
  double max_vertical_drift = 0.0;   // base motion along vertical arcs
  double max_horizontality = 0.0;    // |theta(tangent)| / |tangent| on horizontal arcs
  double closure = 0.0;
};
AngleAudit audit_contour(const Contour& c);

// Smallest c4 = c5 such that the contour avoids the umbrellas at p4 and p5 away from the
// edges p3p4 and p5p6: 0 if already clear, else 1e-3 doubled until clear.
struct Retranslation {
  double c4 = 0.0, c5 = 0.0;
  double gap_before = 0.0, gap_after = 0.0;
  int doublings = 0;
};
Retranslation retranslate(const NoidSpec& spec, int max_doublings = 40);
// Largest excess of the sampled contour over U4 and under U5 (<= tol when clear).
double umbrella_violation(const Contour& c);

// Dirichlet data on the projected polygon.
struct BoundaryData {
  SpaceParams space;
  std::vector<Vec2> polygon;
  std::vector<double> start_height;  // height leaving polygon[i] along edge i
  std::vector<double> end_height;    // height reaching polygon[i + 1] along edge i
  std::vector<bool> jump;            // polygon[i] is the projection of a vertical arc

  std::size_t size() const { return polygon.size(); }
  // Height over q on edge i (q on the base geodesic polygon[i] -> polygon[i + 1]).
  double edge_height(std::size_t i, const Vec2& q) const;
  double jump_size(std::size_t i) const;
};
BoundaryData boundary_heights(const Contour& c);

struct ConeAngle {
  double psi = 0.0;
  double psi_sup = 0.0;
  bool below_pi = false;
};
using AngleProfile = std::function<double(double)>;
ConeAngle tangent_cone_angle(double h_plus, double h_minus, double delta, double phi, double epsilon,
                             const AngleProfile& beta_plus, const AngleProfile& beta_minus);
// (n - 2) pi - sum of interior angles.
double angle_defect(const BasePolygon& poly);

// Line-based text format: header, space line, one line per arc.
void write_contour(std::ostream& os, const Contour& c);
Contour read_contour(std::istream& is);

}  // namespace noids
