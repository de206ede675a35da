#include "bellow/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bellow/error.hpp"

namespace bellow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kScanPoints = 32;
constexpr int kGoldenIterations = 60;

double segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (a + s * ab - p).norm();
}

// Signed angle from u to v about the unit axis, in (-pi, pi].
double signed_angle(const Vec3& u, const Vec3& v, const Vec3& axis) {
  const Vec3 up = (u - u.dot(axis) * axis).normalized();
  const Vec3 vp = (v - v.dot(axis) * axis).normalized();
  double a = std::atan2(up.cross(vp).dot(axis), up.dot(vp));
  if (a <= -std::numbers::pi + 1e-9) a = std::numbers::pi;
  if (std::abs(a) < 1e-12) a = 0.0;
  return a;
}

Vec3 any_perpendicular(const Vec3& t) {
  const Vec3 trial = std::abs(t.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (trial - trial.dot(t) * t).normalized();
}

double max_deviation(const Biarc& b, std::span<const Vec3> pts) {
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, b.distance_to(p));
  return worst;
}

}  // namespace

Vec3 ArcPiece::point_at(double s) const {
  if (straight()) return start + s * tangent;
  const double a = kappa * s;
  const double h = std::sin(0.5 * a);
  return start + (std::sin(a) / kappa) * tangent + (2.0 * h * h / kappa) * normal;
}

Vec3 ArcPiece::tangent_at(double s) const {
  if (straight()) return tangent;
  const double a = kappa * s;
  return std::cos(a) * tangent + std::sin(a) * normal;
}

Vec3 ArcPiece::normal_at(double s) const {
  if (straight()) return normal;
  const double a = kappa * s;
  return std::cos(a) * normal - std::sin(a) * tangent;
}

double ArcPiece::distance_to(const Vec3& p) const {
  if (straight()) return segment_distance(start, end(), p);
  const Vec3 c = center();
  const double r = radius();
  const Vec3 b = binormal();
  const Vec3 v = p - c;
  const double h = v.dot(b);
  const Vec3 in_plane = v - h * b;
  // Angle swept from the start point, measured in the direction of travel.
  double ang = std::atan2(in_plane.dot(tangent), in_plane.dot(-normal));
  if (ang < 0.0) ang += 2.0 * std::numbers::pi;
  const double sweep = kappa * length;
  if (ang <= sweep && in_plane.norm() > 0.0) {
    const double radial = in_plane.norm() - r;
    return std::sqrt(radial * radial + h * h);
  }
  return std::min((p - start).norm(), (p - end()).norm());
}

ArcPiece arc_through(const Vec3& start, const Vec3& tangent, const Vec3& end) {
  ArcPiece piece;
  piece.start = start;
  piece.tangent = tangent.normalized();
  const Vec3 chord = end - start;
  const double chord_len = chord.norm();
  const double along = chord.dot(piece.tangent);
  const Vec3 perp = chord - along * piece.tangent;
  const double perp_len = perp.norm();
  if (perp_len <= 1e-12 * chord_len || chord_len == 0.0) {
    if (along <= 0.0) throw DegenerateError("arc end lies behind its start tangent");
    piece.normal = any_perpendicular(piece.tangent);
    piece.kappa = 0.0;
    piece.length = chord_len;
    return piece;
  }
  piece.normal = perp / perp_len;
  piece.kappa = 2.0 * perp_len / (chord_len * chord_len);
  const double sweep = 2.0 * std::atan2(perp_len, along);
  piece.length = sweep / piece.kappa;
  return piece;
}

Biarc solve_biarc(const Vec3& p_i, const Vec3& t_i_in, const Vec3& p_e, const Vec3& t_e_in, double d1) {
  const Vec3 t_i = t_i_in.normalized(), t_e = t_e_in.normalized();
  const Vec3 v = p_e - p_i;
  if (v.norm() == 0.0) throw DegenerateError("biarc endpoints coincide");
  if (!(d1 > 0.0) || !std::isfinite(d1)) throw DegenerateError("d1 must be positive");
  // |v - d1 t_i - d2 t_e| = d1 + d2 is linear in d2 because |t_e| = 1.
  const Vec3 w = v - d1 * t_i;
  const double denom = 2.0 * (w.dot(t_e) + d1);
  const double num = w.squaredNorm() - d1 * d1;
  const double d2 = num / denom;
  if (!std::isfinite(d2) || !(d2 > 1e-12 * v.norm())) {
    throw DegenerateError("no positive d2 for this biarc configuration");
  }
  Biarc b;
  b.p_i = p_i;
  b.t_i = t_i;
  b.p_e = p_e;
  b.t_e = t_e;
  b.d1 = d1;
  b.d2 = d2;
  b.q_i = p_i + d1 * t_i;
  b.q_e = p_e - d2 * t_e;
  b.p_c = (d2 * b.q_i + d1 * b.q_e) / (d1 + d2);
  b.t_c = (b.q_e - b.q_i).normalized();
  b.first = arc_through(p_i, t_i, b.p_c);
  b.second = arc_through(b.p_c, b.t_c, p_e);
  return b;
}

double symmetric_d1(const Vec3& p_i, const Vec3& t_i, const Vec3& p_e, const Vec3& t_e) {
  const Vec3 v = p_e - p_i;
  const Vec3 t = t_i.normalized() + t_e.normalized();
  const double a = 4.0 - t.squaredNorm();
  const double b = v.dot(t);
  const double vv = v.squaredNorm();
  // Positive root of a d^2 + 2 b d - vv = 0 in cancellation-free form.
  const double den = b + std::sqrt(std::max(0.0, b * b + a * vv));
  if (!(den > 0.0)) throw DegenerateError("no symmetric biarc");
  return vv / den;
}

BiarcFit best_biarc(const Vec3& p_i, const Vec3& t_i, const Vec3& p_e, const Vec3& t_e,
                    std::span<const Vec3> interior) {
  const double chord = (p_e - p_i).norm();
  if (chord == 0.0) throw DegenerateError("biarc endpoints coincide");

  std::optional<BiarcFit> best;
  auto consider = [&](double d1) -> double {
    try {
      Biarc b = solve_biarc(p_i, t_i, p_e, t_e, d1);
      const double dev = max_deviation(b, interior);
      if (!best || dev < best->max_deviation) best = BiarcFit{std::move(b), dev};
      return dev;
    } catch (const DegenerateError&) {
      return kInf;
    }
  };

  // Symmetric biarc first so that it wins ties (and is the answer when there
  // is nothing to fit).
  double sym = -1.0;
  try {
    sym = symmetric_d1(p_i, t_i, p_e, t_e);
    consider(sym);
  } catch (const DegenerateError&) {
  }
  if (interior.empty()) {
    if (best) return *best;
  }

  const double hi = 2.0 * chord;
  double scan_best = kInf;
  int scan_idx = -1;
  for (int k = 1; k <= kScanPoints; ++k) {
    const double dev = consider(hi * k / kScanPoints);
    if (dev < scan_best) {
      scan_best = dev;
      scan_idx = k;
    }
  }
  if (!best) throw DegenerateError("no valid biarc between these endpoints");

  if (scan_idx > 0 && !interior.empty()) {
    double a = hi * (scan_idx - 1) / kScanPoints;
    double b = hi * std::min(scan_idx + 1, kScanPoints) / kScanPoints;
    if (a <= 0.0) a = 1e-9 * chord;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = consider(x1), f2 = consider(x2);
    for (int it = 0; it < kGoldenIterations; ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = consider(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = consider(x2);
      }
    }
  }
  return *best;
}

std::vector<ModuleState> segments_to_chain(std::span<const ArcSegment> segments) {
  std::vector<ModuleState> chain;
  chain.reserve(segments.size());
  for (const auto& s : segments) chain.push_back({s.kappa * s.L, s.L, s.dphi});
  return chain;
}

std::vector<Vec3> reconstruct(const SegmentationResult& result, int samples_per_segment) {
  const auto chain = segments_to_chain(result.segments);
  return sample_chain(chain, samples_per_segment, result.base);
}

namespace {

struct LineRun {
  std::size_t first, last;
};

std::vector<LineRun> find_straight_runs(std::span<const Vec3> data, std::span<const ProjectedPoint> proj,
                                        double tolerance, const SegmentOptions& opt) {
  std::vector<LineRun> runs;
  const double cos_limit = std::cos(opt.straight_run_angle_deg * std::numbers::pi / 180.0);
  const std::size_t m = proj.size() - 1;
  std::size_t k = 0;
  while (k < m) {
    std::size_t j = k;
    while (j + 1 <= m && proj[j + 1].tangent.dot(proj[k].tangent) >= cos_limit) ++j;
    bool accepted = false;
    if (j - k + 1 >= opt.straight_run_min_points) {
      const Vec3 a = proj[k].position, b = proj[j].position;
      const Vec3 dir = (b - a).normalized();
      accepted = dir.dot(proj[k].tangent) >= cos_limit;
      for (std::size_t q = k; accepted && q <= j; ++q) {
        if (segment_distance(a, b, data[q]) > tolerance) accepted = false;
      }
    }
    if (accepted) {
      runs.push_back({k, j});
      k = j;
    } else {
      ++k;
    }
  }
  return runs;
}

bool same_circle(const ArcPiece& a, const ArcPiece& b, const SegmentOptions& opt) {
  if (a.straight() || b.straight()) {
    return a.straight() && b.straight() && (a.tangent - b.tangent).norm() < opt.merge_plane;
  }
  const double rel = std::abs(a.kappa - b.kappa) / std::max(a.kappa, b.kappa);
  if (rel >= opt.merge_curvature_rel) return false;
  const Vec3 ba = a.binormal(), bb = b.binormal();
  if (ba.cross(bb).norm() >= opt.merge_plane || ba.dot(bb) <= 0.0) return false;
  return (a.normal_at(a.length) - b.normal).norm() < opt.merge_plane;
}

}  // namespace

SegmentationResult segment(std::span<const Vec3> points, double tolerance, const SegmentOptions& opt) {
  if (points.size() < 4) throw ValidationError("too few points", {"at least 4 points"});
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
    throw ValidationError("invalid tolerance", {"tolerance > 0"});
  }

  SegmentationResult out;
  AutoFitResult fitted = auto_fit(points, opt.fit_target_fraction * tolerance);
  out.spline = std::move(fitted.curve);
  out.fit_residual = fitted.max_residual;

  std::vector<ProjectedPoint> proj;
  proj.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    proj.push_back(project(out.spline, points[k]));
    proj.back().source_index = k;
  }
  const std::size_t m = points.size() - 1;

  const auto runs = find_straight_runs(points, proj, tolerance, opt);

  std::vector<ArcPiece> pieces;
  auto emit = [&](const ArcPiece& p) {
    if (p.length > 1e-9) pieces.push_back(p);
  };
  auto line_piece = [&](std::size_t a, std::size_t b) {
    ArcPiece p;
    p.start = proj[a].position;
    const Vec3 d = proj[b].position - proj[a].position;
    p.tangent = d.normalized();
    p.normal = any_perpendicular(p.tangent);
    p.kappa = 0.0;
    p.length = d.norm();
    return p;
  };

  // Greedy cover of [s, e] by biarcs; tangent overrides keep G1 with lines.
  auto cover = [&](std::size_t s, std::size_t e, const Vec3* t_start, const Vec3* t_end) {
    auto tangent_at = [&](std::size_t k) -> Vec3 {
      if (k == s && t_start) return *t_start;
      if (k == e && t_end) return *t_end;
      return proj[k].tangent;
    };
    auto attempt = [&](std::size_t from, std::size_t to) -> std::optional<BiarcFit> {
      try {
        std::span<const Vec3> inner = points.subspan(from + 1, to - from - 1);
        BiarcFit f = best_biarc(proj[from].position, tangent_at(from), proj[to].position, tangent_at(to), inner);
        if (f.max_deviation <= tolerance) return f;
      } catch (const DegenerateError&) {
      }
      return std::nullopt;
    };

    std::size_t cur = s;
    while (cur < e) {
      std::optional<BiarcFit> chosen = attempt(cur, e);
      std::size_t reach = e;
      if (!chosen) {
        std::size_t lo = cur + 1, hi = e;
        std::optional<BiarcFit> lo_fit;
        while (hi - lo > 1) {
          const std::size_t mid = lo + (hi - lo) / 2;
          if (auto f = attempt(cur, mid)) {
            lo = mid;
            lo_fit = std::move(f);
          } else {
            hi = mid;
          }
        }
        if (lo == cur + 1) {
          if (e >= cur + 2) {
            throw ToleranceError("tolerance " + std::to_string(tolerance) +
                                 " mm cannot be met by a single biarc over 3 points near index " +
                                 std::to_string(cur));
          }
          lo_fit = attempt(cur, cur + 1);
          if (!lo_fit) throw DegenerateError("no biarc between consecutive points at index " + std::to_string(cur));
        }
        chosen = std::move(lo_fit);
        reach = lo;
      }
      emit(chosen->biarc.first);
      emit(chosen->biarc.second);
      cur = reach;
    }
  };

  std::size_t cursor = 0;
  std::optional<Vec3> carried_tangent;
  for (std::size_t r = 0; r <= runs.size(); ++r) {
    const std::size_t curve_end = r < runs.size() ? runs[r].first : m;
    std::optional<Vec3> next_line_dir;
    if (r < runs.size()) next_line_dir = line_piece(runs[r].first, runs[r].last).tangent;
    if (curve_end > cursor) {
      cover(cursor, curve_end, carried_tangent ? &*carried_tangent : nullptr,
            next_line_dir ? &*next_line_dir : nullptr);
    }
    if (r < runs.size()) {
      ArcPiece lp = line_piece(runs[r].first, runs[r].last);
      carried_tangent = lp.tangent;
      emit(lp);
      cursor = runs[r].last;
    }
  }
  if (pieces.empty()) throw DegenerateError("segmentation produced no segments");

  // Collapse consecutive pieces lying on the same circle (or line).
  std::vector<ArcPiece> merged;
  for (const auto& p : pieces) {
    if (!merged.empty() && same_circle(merged.back(), p, opt)) {
      merged.back().length += p.length;
    } else {
      merged.push_back(p);
    }
  }

  // Twist bookkeeping: x_carry is the bending direction carried along the
  // chain exactly as the constant-curvature transform does.
  const Vec3 t0 = merged.front().tangent;
  Vec3 x0 = any_perpendicular(t0);
  for (const auto& p : merged) {
    if (classify_curvature(p.kappa) == SegmentKind::arc) {
      x0 = (p.normal - p.normal.dot(t0) * t0).normalized();
      break;
    }
  }
  out.base = Pose::Identity();
  out.base.linear().col(0) = x0;
  out.base.linear().col(1) = t0.cross(x0);
  out.base.linear().col(2) = t0;
  out.base.translation() = merged.front().start;

  Vec3 x_carry = x0;
  for (const auto& p : merged) {
    ArcSegment seg;
    seg.L = p.length;
    seg.kappa = p.kappa;
    seg.kind = classify_curvature(p.kappa);
    Vec3 bend_dir = x_carry;
    if (seg.kind == SegmentKind::arc) {
      seg.dphi = signed_angle(x_carry, p.normal, p.tangent);
      bend_dir = p.normal;
    }
    const double theta = p.kappa * p.length;
    const Vec3 t_axis = p.tangent;
    const Vec3 b_dir = (bend_dir - bend_dir.dot(t_axis) * t_axis).normalized();
    x_carry = std::cos(theta) * b_dir - std::sin(theta) * t_axis;
    out.segments.push_back(seg);
  }
  out.pieces = std::move(merged);
  return out;
}

}  // namespace bellow
