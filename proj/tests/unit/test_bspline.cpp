#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bellow/bspline.hpp"
#include "bellow/error.hpp"
#include "bellow/rng.hpp"

using namespace bellow;

namespace {

std::vector<Vec3> arc_points(double radius, double angle, int count) {
  std::vector<Vec3> pts;
  for (int i = 0; i < count; ++i) {
    const double a = angle * i / (count - 1);
    pts.emplace_back(radius * (1 - std::cos(a)), 0.0, radius * std::sin(a));
  }
  return pts;
}

}  // namespace

TEST_SUITE("bspline") {
  TEST_CASE("clamped knots") {
    const auto k = clamped_uniform_knots(5, 2);
    const std::vector<double> expect = {0, 0, 0, 1.0 / 3, 2.0 / 3, 1, 1, 1};
    REQUIRE(k.size() == expect.size());
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == doctest::Approx(expect[i]));
  }

  TEST_CASE("basis is a partition of unity and non-negative") {
    for (int degree : {1, 2, 3}) {
      const auto k = clamped_uniform_knots(9, degree);
      for (int s = 0; s <= 1000; ++s) {
        const double t = s / 1000.0;
        double total = 0.0;
        for (std::size_t i = 0; i < 9; ++i) {
          const double b = basis(i, degree, t, k);
          CHECK(b >= 0.0);
          total += b;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }

  TEST_CASE("quadratic fit reproduces a quadratic exactly") {
    std::vector<Vec3> pts;
    for (int i = 0; i <= 40; ++i) {
      const double u = i / 40.0;
      pts.emplace_back(3 * u, u * u, 1 - u);
    }
    const auto c = fit(pts, 3, 2);
    CHECK(max_projection_residual(c, pts) < 1e-9);
  }

  TEST_CASE("circle arc fit residual") {
    const auto pts = arc_points(50.0, 1.5, 120);
    const auto r = auto_fit(pts, 0.05);
    CHECK(r.target_met);
    CHECK(r.max_residual < 0.1);
    CHECK(r.curve.arc_length() == doctest::Approx(75.0).epsilon(5e-3));
  }

  TEST_CASE("projection is idempotent") {
    const auto pts = arc_points(40.0, 2.0, 80);
    const auto c = fit(pts, 8, 2);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const Vec3 q = pts[rng.index(pts.size())] + Vec3(rng.normal(), rng.normal(), rng.normal());
      const auto once = project(c, q);
      const auto twice = project(c, once.position);
      CHECK((once.position - twice.position).norm() < 1e-8);
      CHECK(twice.distance < 1e-8);
      CHECK(once.tangent.norm() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("degenerate fits are rejected") {
    std::vector<Vec3> same(10, Vec3(1, 2, 3));
    CHECK_THROWS_AS(fit(same, 4, 2), FitError);
    const auto pts = arc_points(10.0, 1.0, 5);
    CHECK_THROWS_AS(fit(pts, 8, 2), FitError);
  }
}
