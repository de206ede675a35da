#include "bellow/bspline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "bellow/error.hpp"

namespace bellow {

namespace {

constexpr int kMaxDegree = 5;
constexpr int kProjectionSeeds = 256;

// Index of the knot span containing t, clamped so t = 1 falls in the last
// non-empty span.
std::size_t find_span(const std::vector<double>& U, std::size_t n_control, int p, double t) {
  const std::size_t n = n_control - 1;
  if (t >= U[n + 1]) return n;
  if (t <= U[static_cast<std::size_t>(p)]) return static_cast<std::size_t>(p);
  std::size_t lo = static_cast<std::size_t>(p), hi = n + 1;
  std::size_t mid = (lo + hi) / 2;
  while (t < U[mid] || t >= U[mid + 1]) {
    if (t < U[mid]) hi = mid;
    else lo = mid;
    mid = (lo + hi) / 2;
  }
  return mid;
}

// Non-zero basis functions and their derivatives up to `nd` at t in `span`.
// ders[k][j] is the k-th derivative of B_{span-p+j,p}.
void ders_basis(const std::vector<double>& U, std::size_t span, int p, double t, int nd,
                std::array<std::array<double, kMaxDegree + 1>, 3>& ders) {
  std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> ndu{};
  std::array<double, kMaxDegree + 1> left{}, right{};
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - U[span + 1 - j];
    right[j] = U[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double tmp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    ndu[j][j] = saved;
  }
  for (auto& row : ders) row.fill(0.0);
  for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

  std::array<std::array<double, kMaxDegree + 1>, 2> a{};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd && k <= p; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= nd && k <= p; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
    factor *= (p - k);
  }
}

Vec3 eval_derivative(const BSplineCurve& c, double t, int order) {
  const int p = c.degree;
  const double tc = std::clamp(t, 0.0, 1.0);
  const std::size_t span = find_span(c.knots, c.control_points.size(), p, tc);
  std::array<std::array<double, kMaxDegree + 1>, 3> ders{};
  ders_basis(c.knots, span, p, tc, order, ders);
  Vec3 out = Vec3::Zero();
  for (int j = 0; j <= p; ++j) out += ders[order][j] * c.control_points[span - p + j];
  return out;
}

void check_curve(const BSplineCurve& c) {
  if (c.degree < 1 || c.degree > kMaxDegree) throw FitError("unsupported B-spline degree");
  if (c.control_points.size() < static_cast<std::size_t>(c.degree + 1) ||
      c.knots.size() != c.control_points.size() + c.degree + 1) {
    throw FitError("inconsistent B-spline control points and knots");
  }
}

}  // namespace

std::vector<double> clamped_uniform_knots(std::size_t n_control, int degree) {
  const std::size_t d = static_cast<std::size_t>(degree);
  if (n_control < d + 1) throw FitError("need at least degree + 1 control points");
  const std::size_t n = n_control - 1;
  std::vector<double> U(n + d + 2, 0.0);
  for (std::size_t i = d + 1; i <= n; ++i) {
    U[i] = static_cast<double>(i - d) / static_cast<double>(n + 1 - d);
  }
  for (std::size_t i = n + 1; i < U.size(); ++i) U[i] = 1.0;
  return U;
}

double basis(std::size_t i, int degree, double t, std::span<const double> knots) {
  if (degree < 0 || i + static_cast<std::size_t>(degree) + 1 >= knots.size()) {
    throw std::out_of_range("basis index out of range");
  }
  if (degree == 0) {
    if (knots[i] <= t && t < knots[i + 1]) return 1.0;
    // Right-closed last non-empty span.
    const double last = knots.back();
    if (t == last && knots[i + 1] == last && knots[i] < knots[i + 1]) return 1.0;
    return 0.0;
  }
  const std::size_t j = static_cast<std::size_t>(degree);
  double value = 0.0;
  const double den1 = knots[i + j] - knots[i];
  if (den1 != 0.0) value += (t - knots[i]) / den1 * basis(i, degree - 1, t, knots);
  const double den2 = knots[i + j + 1] - knots[i + 1];
  if (den2 != 0.0) value += (knots[i + j + 1] - t) / den2 * basis(i + 1, degree - 1, t, knots);
  return value;
}

Vec3 BSplineCurve::evaluate(double t) const { return eval_derivative(*this, t, 0); }
Vec3 BSplineCurve::derivative(double t) const { return eval_derivative(*this, t, 1); }
Vec3 BSplineCurve::second_derivative(double t) const {
  if (degree < 2) return Vec3::Zero();
  return eval_derivative(*this, t, 2);
}

double BSplineCurve::arc_length() const {
  // 5-point Gauss-Legendre on each of 8 sub-intervals per knot span.
  static constexpr std::array<double, 5> x = {0.0, -0.5384693101056831, 0.5384693101056831,
                                              -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> w = {0.5688888888888889, 0.4786286704993665,
                                              0.4786286704993665, 0.2369268850561891,
                                              0.2369268850561891};
  double len = 0.0;
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double a = knots[s], b = knots[s + 1];
    if (b <= a) continue;
    constexpr int kSub = 8;
    for (int q = 0; q < kSub; ++q) {
      const double lo = a + (b - a) * q / kSub, hi = a + (b - a) * (q + 1) / kSub;
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (int g = 0; g < 5; ++g) len += w[g] * half * derivative(mid + half * x[g]).norm();
    }
  }
  return len;
}

BSplineCurve fit(std::span<const Vec3> points, std::size_t n_control, int degree) {
  if (degree < 1 || degree > kMaxDegree) throw FitError("unsupported B-spline degree");
  if (n_control < 3 || n_control < static_cast<std::size_t>(degree + 1)) {
    throw FitError("too few control points");
  }
  if (points.size() < n_control) {
    throw FitError("more control points (" + std::to_string(n_control) + ") than data points (" +
                   std::to_string(points.size()) + ")");
  }
  Vec3 lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    if (!p.allFinite()) throw FitError("non-finite data point");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if ((hi - lo).norm() <= 1e-12) throw FitError("rank-deficient fit: data points coincide");

  BSplineCurve curve;
  curve.degree = degree;
  curve.knots = clamped_uniform_knots(n_control, degree);
  curve.control_points.assign(n_control, Vec3::Zero());

  const std::size_t m = points.size() - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m + 1),
                                            static_cast<Eigen::Index>(n_control));
  Eigen::MatrixXd P(static_cast<Eigen::Index>(m + 1), 3);
  std::array<std::array<double, kMaxDegree + 1>, 3> ders{};
  for (std::size_t k = 0; k <= m; ++k) {
    const double tk = m == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(m);
    const std::size_t span = find_span(curve.knots, n_control, degree, tk);
    ders_basis(curve.knots, span, degree, tk, 0, ders);
    for (int j = 0; j <= degree; ++j) {
      A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(span - degree + j)) = ders[0][j];
    }
    P.row(static_cast<Eigen::Index>(k)) = points[k].transpose();
  }
  // Orthogonal factorization instead of forming (A^T A)^{-1}.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < static_cast<Eigen::Index>(n_control)) {
    throw FitError("rank-deficient fit: " + std::to_string(n_control) + " control points for " +
                   std::to_string(points.size()) + " samples");
  }
  const Eigen::MatrixXd Q = qr.solve(P);
  for (std::size_t i = 0; i < n_control; ++i) {
    curve.control_points[i] = Q.row(static_cast<Eigen::Index>(i)).transpose();
  }
  return curve;
}

ProjectedPoint project(const BSplineCurve& curve, const Vec3& point) {
  check_curve(curve);
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kProjectionSeeds; ++i) {
    const double t = static_cast<double>(i) / (kProjectionSeeds - 1);
    const double d2 = (curve.evaluate(t) - point).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  // g(t) = (S(t) - p) . S'(t) is half the derivative of the squared distance.
  auto g = [&](double t) { return (curve.evaluate(t) - point).dot(curve.derivative(t)); };
  double a = std::max(0.0, static_cast<double>(best - 1) / (kProjectionSeeds - 1));
  double b = std::min(1.0, static_cast<double>(best + 1) / (kProjectionSeeds - 1));
  double t = static_cast<double>(best) / (kProjectionSeeds - 1);
  double ga = g(a), gb = g(b);

  if (ga <= 0.0 && gb >= 0.0) {
    for (int iter = 0; iter < 100; ++iter) {
      const Vec3 diff = curve.evaluate(t) - point;
      const Vec3 d1 = curve.derivative(t);
      const double gt = diff.dot(d1);
      if (std::abs(2.0 * gt) < 1e-10 || b - a < 1e-15) break;
      if (gt < 0.0) a = t;
      else b = t;
      const double dg = d1.squaredNorm() + diff.dot(curve.second_derivative(t));
      double next = dg > 0.0 ? t - gt / dg : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      t = next;
    }
  } else {
    // No interior stationary point in the bracket: the bracket end with the
    // smaller distance wins (this happens at t = 0 or t = 1).
    const double da = (curve.evaluate(a) - point).squaredNorm();
    const double db = (curve.evaluate(b) - point).squaredNorm();
    if (da < best_d2 && da <= db) t = a;
    else if (db < best_d2) t = b;
  }

  ProjectedPoint out;
  out.param = t;
  out.position = curve.evaluate(t);
  Vec3 tan = curve.derivative(t);
  if (tan.norm() == 0.0) {
    // Stationary parameterization; fall back to a one-sided difference.
    const double h = 1e-6;
    tan = t + h <= 1.0 ? curve.evaluate(t + h) - out.position : out.position - curve.evaluate(t - h);
  }
  out.tangent = tan.normalized();
  out.distance = (out.position - point).norm();
  return out;
}

double max_projection_residual(const BSplineCurve& curve, std::span<const Vec3> points) {
  double worst = 0.0;
  for (const auto& p : points) worst = std::max(worst, project(curve, p).distance);
  return worst;
}

AutoFitResult auto_fit(std::span<const Vec3> points, double residual_target, int degree) {
  if (!(residual_target > 0.0)) throw FitError("residual target must be positive");
  const std::size_t max_n = points.size() / 2;
  const std::size_t min_n = std::max<std::size_t>(4, static_cast<std::size_t>(degree + 1));
  if (max_n < min_n) {
    throw FitError("too few data points (" + std::to_string(points.size()) + ") for automatic fit");
  }
  AutoFitResult best;
  best.max_residual = std::numeric_limits<double>::infinity();
  const std::size_t m = points.size() - 1;
  for (std::size_t n = min_n; n <= max_n; ++n) {
    BSplineCurve c = fit(points, n, degree);
    // |S(t_k) - p_k| bounds the projection distance from above; skip the
    // projection pass when the bound already fails badly.
    double sample_bound = 0.0;
    for (std::size_t k = 0; k <= m; ++k) {
      const double tk = static_cast<double>(k) / static_cast<double>(m);
      sample_bound = std::max(sample_bound, (c.evaluate(tk) - points[k]).norm());
    }
    double residual = sample_bound;
    if (sample_bound > residual_target) residual = max_projection_residual(c, points);
    if (residual < best.max_residual) {
      best.curve = std::move(c);
      best.max_residual = residual;
    }
    if (residual <= residual_target) {
      if (residual == sample_bound) best.max_residual = max_projection_residual(best.curve, points);
      best.target_met = true;
      return best;
    }
  }
  return best;
}

}  // namespace bellow
