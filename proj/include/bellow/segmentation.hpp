#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bellow/bspline.hpp"
#include "bellow/kinematics.hpp"

namespace bellow {

// Segments with curvature below this are straight.
inline constexpr double kStraightCurvature = 1e-4;

enum class SegmentKind { arc, line };

struct ArcSegment {
  double L = 0.0;      // arc length, mm
  double kappa = 0.0;  // curvature, 1/mm
  double dphi = 0.0;   // twist relative to the previous segment's bending plane, rad
  SegmentKind kind = SegmentKind::arc;

  friend bool operator==(const ArcSegment&, const ArcSegment&) = default;
};

inline SegmentKind classify_curvature(double kappa) {
  return kappa < kStraightCurvature ? SegmentKind::line : SegmentKind::arc;
}

// A circular arc (or straight piece) in space, parameterized from its start.
struct ArcPiece {
  Vec3 start = Vec3::Zero();
  Vec3 tangent = Vec3::UnitZ();  // unit tangent at start
  Vec3 normal = Vec3::UnitX();   // unit vector from start toward the center
  double kappa = 0.0;
  double length = 0.0;

  bool straight() const { return kappa == 0.0; }
  double radius() const { return 1.0 / kappa; }
  Vec3 center() const { return start + normal / kappa; }
  Vec3 binormal() const { return tangent.cross(normal); }
  Vec3 point_at(double s) const;
  Vec3 tangent_at(double s) const;
  Vec3 normal_at(double s) const;
  Vec3 end() const { return point_at(length); }
  Vec3 end_tangent() const { return tangent_at(length); }
  double distance_to(const Vec3& p) const;
};

// Circle through `start` with tangent `tangent` that passes through `end`.
// Throws DegenerateError when `end` lies behind the start on the tangent line.
ArcPiece arc_through(const Vec3& start, const Vec3& tangent, const Vec3& end);

struct Biarc {
  Vec3 p_i, t_i, p_e, t_e;
  Vec3 q_i, q_e;  // tangent-line control points
  Vec3 p_c, t_c;  // connection point and its common tangent
  double d1 = 0.0, d2 = 0.0;
  ArcPiece first, second;

  // Centers are undefined for straight pieces.
  std::optional<Vec3> c_i() const { return first.straight() ? std::nullopt : std::optional(first.center()); }
  std::optional<Vec3> c_e() const { return second.straight() ? std::nullopt : std::optional(second.center()); }
  double distance_to(const Vec3& p) const { return std::min(first.distance_to(p), second.distance_to(p)); }
};

// Biarc for a chosen d1: d2 follows from |Q_e - Q_i| = d1 + d2 and the
// connection point is (d2 Q_i + d1 Q_e) / (d1 + d2). Throws DegenerateError
// when no positive d2 exists.
Biarc solve_biarc(const Vec3& p_i, const Vec3& t_i, const Vec3& p_e, const Vec3& t_e, double d1);

// d1 of the equal-tangent-length biarc (d1 == d2).
double symmetric_d1(const Vec3& p_i, const Vec3& t_i, const Vec3& p_e, const Vec3& t_e);

struct BiarcFit {
  Biarc biarc;
  double max_deviation = 0.0;
};

// d1 minimizing the max distance from the interior points to the biarc:
// 32-point scan over (0, 2|P_e - P_i|] then golden-section refinement. With no
// interior points the symmetric biarc is returned.
BiarcFit best_biarc(const Vec3& p_i, const Vec3& t_i, const Vec3& p_e, const Vec3& t_e,
                    std::span<const Vec3> interior);

struct SegmentOptions {
  double merge_curvature_rel = 1e-6;
  double merge_plane = 1e-6;
  double straight_run_angle_deg = 0.1;
  std::size_t straight_run_min_points = 4;
  // B-spline residual target as a fraction of the segmentation tolerance.
  double fit_target_fraction = 0.5;
};

struct SegmentationResult {
  std::vector<ArcSegment> segments;
  std::vector<ArcPiece> pieces;  // geometry of each segment, same order
  // Frame at the curve start: z along the initial tangent, x toward the first
  // bending direction. Reconstruction starts here.
  Pose base = Pose::Identity();
  BSplineCurve spline;
  double fit_residual = 0.0;
};

// Fits a B-spline, cuts out straight runs, then greedily covers the rest with
// the longest biarcs within `tolerance` (mm).
SegmentationResult segment(std::span<const Vec3> points, double tolerance,
                           const SegmentOptions& options = {});

// Module chain (theta = kappa * L) reproducing the segments from `base`.
std::vector<ModuleState> segments_to_chain(std::span<const ArcSegment> segments);
std::vector<Vec3> reconstruct(const SegmentationResult& result, int samples_per_segment = 64);

}  // namespace bellow
