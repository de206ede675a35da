#pragma once

#include <span>
#include <vector>

#include "bellow/kinematics.hpp"

namespace bellow {

// Clamped B-spline with uniform interior knots. `degree` defaults to 2
// (order 3); degree 3 is available through the same interface.
struct BSplineCurve {
  std::vector<Vec3> control_points;
  std::vector<double> knots;
  int degree = 2;

  Vec3 evaluate(double t) const;
  Vec3 derivative(double t) const;
  Vec3 second_derivative(double t) const;
  // Arc length by adaptive-free composite Gauss-Legendre over knot spans.
  double arc_length() const;
};

struct ProjectedPoint {
  Vec3 position;
  Vec3 tangent;  // unit
  double param = 0.0;
  double distance = 0.0;
  std::size_t source_index = 0;
};

// Clamped knot vector for n_control control points: degree+1 zeros, interior
// knots (i - d)/(n + 1 - d) for d + 1 <= i <= n, degree+1 ones.
std::vector<double> clamped_uniform_knots(std::size_t n_control, int degree);

// Cox-de Boor recursion evaluated literally. Terms with a zero denominator
// contribute 0; the final non-empty span is closed on the right so that the
// basis is defined at t = 1.
double basis(std::size_t i, int degree, double t, std::span<const double> knots);

// Least-squares fit with samples at t_k = k/m. Throws FitError when the
// system is rank-deficient or the data are degenerate.
BSplineCurve fit(std::span<const Vec3> points, std::size_t n_control, int degree = 2);

struct AutoFitResult {
  BSplineCurve curve;
  double max_residual = 0.0;  // max projection distance of the data
  bool target_met = false;
};

// Smallest control-point count in [4, points/2] whose projection residual
// meets the target. When none does, returns the best fit with
// target_met = false.
AutoFitResult auto_fit(std::span<const Vec3> points, double residual_target, int degree = 2);

// Closest point on the curve (dense seeding plus safeguarded Newton).
ProjectedPoint project(const BSplineCurve& curve, const Vec3& point);

// Max projection distance of the points to the curve.
double max_projection_residual(const BSplineCurve& curve, std::span<const Vec3> points);

}  // namespace bellow
