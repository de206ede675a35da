#include <doctest.h>

#include <cmath>

#include "bellow/gaussian_process.hpp"
#include "bellow/rng.hpp"

using namespace bellow;

TEST_SUITE("gaussian_process") {
  TEST_CASE("matern kernel") {
    Eigen::VectorXd a(2), b(2), l(2);
    a << 0.1, 0.2;
    b = a;
    l << 0.5, 0.5;
    CHECK(matern52(a, b, l) == doctest::Approx(1.0));
    b << 0.6, 0.2;  // r = 1 length scale
    const double s = std::sqrt(5.0);
    CHECK(matern52(a, b, l) == doctest::Approx((1 + s + 5.0 / 3.0) * std::exp(-s)));
  }

  TEST_CASE("posterior interpolates training data") {
    Rng rng(4);
    std::vector<Eigen::VectorXd> x;
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd p(2);
      p << rng.uniform(), rng.uniform();
      x.push_back(p);
      y.push_back(std::sin(3 * p[0]) + p[1] * p[1]);
    }
    GaussianProcess gp;
    gp.fit(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      double mean, var;
      gp.predict(x[i], mean, var);
      CHECK(mean == doctest::Approx(y[i]).epsilon(1e-2));
      CHECK(var >= 0.0);
    }
    // Held-out accuracy on a smooth function.
    Eigen::VectorXd q(2);
    q << 0.5, 0.5;
    double mean, var;
    gp.predict(q, mean, var);
    CHECK(mean == doctest::Approx(std::sin(1.5) + 0.25).epsilon(0.05));
  }

  TEST_CASE("variance grows away from data") {
    std::vector<Eigen::VectorXd> x;
    std::vector<double> y;
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd p(1);
      p << 0.1 * i;
      x.push_back(p);
      y.push_back(p[0]);
    }
    GaussianProcess gp;
    GpHyperparameters h;
    h.length_scales = Eigen::VectorXd::Constant(1, 0.2);
    gp.fit(x, y, h);
    Eigen::VectorXd near(1), far(1);
    near << 0.2;
    far << 0.95;
    double m1, v1, m2, v2;
    gp.predict(near, m1, v1);
    gp.predict(far, m2, v2);
    CHECK(v2 > 100 * v1);
  }

  TEST_CASE("expected improvement") {
    CHECK(expected_improvement(0.0, 0.0, 1.0) == doctest::Approx(1.0));
    CHECK(expected_improvement(2.0, 0.0, 1.0) == 0.0);
    // Zero-mean unit-variance at the incumbent: phi(0) = 1/sqrt(2 pi).
    CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)));
    CHECK(expected_improvement(0.5, 1.0, 1.0) > expected_improvement(1.5, 1.0, 1.0));
  }
}
