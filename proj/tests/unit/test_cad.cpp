#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bellow/cad.hpp"
#include "bellow/error.hpp"

using namespace bellow;

namespace {

// Pappus: a region of area A with centroid radius x revolved through angle
// a sweeps a * x * A. Area and centroid by the shoelace formula.
double pappus(const std::vector<Point2>& loop, double angle) {
  double area = 0.0, cx = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point2& p = loop[i];
    const Point2& q = loop[(i + 1) % loop.size()];
    const double cross = p.x() * q.y() - q.x() * p.y();
    area += cross / 2.0;
    cx += (p.x() + q.x()) * cross / 6.0;
  }
  return angle * cx;  // cx already carries the factor A
}

double module_oracle(const ModuleDesign& d) {
  return pappus(module_profile(d), 2 * std::numbers::pi) + pappus(fan_profile(d), std::numbers::pi / 2);
}

}  // namespace

TEST_SUITE("cad") {
  TEST_CASE("profile loops are counter-clockwise and bounded") {
    const ModuleDesign d;
    const auto loop = module_profile(d);
    CHECK(pappus(loop, 1.0) > 0.0);
    const double r_ou = 2 * d.R - d.r_in;
    for (const auto& p : loop) {
      CHECK(p.x() >= d.r_in - d.t - 1e-9);
      CHECK(p.x() <= r_ou + 1e-9);
      CHECK(p.y() >= -1e-9);
      CHECK(p.y() <= d.l + 1e-9);
    }
    CHECK(pappus(fan_profile(d), 1.0) > 0.0);
    CHECK(radial_moment(loop) == doctest::Approx(pappus(loop, 1.0)).epsilon(1e-12));
  }

  TEST_CASE("default module mesh is a watertight torus-like solid") {
    const ModuleDesign d;
    const auto mesh = mesh_module(d);
    const auto a = audit_mesh(mesh);
    CHECK(a.watertight());
    CHECK(a.ok());
    CHECK(a.euler_characteristic == 0);
    CHECK(a.volume == doctest::Approx(module_oracle(d)).epsilon(0.005));
    CHECK(a.max.z() == doctest::Approx(d.l));
    CHECK(a.min.z() == doctest::Approx(0.0));
    CHECK(a.max.x() == doctest::Approx(2 * d.R - d.r_in).epsilon(1e-3));
  }

  TEST_CASE("volume converges with resolution") {
    const ModuleDesign d;
    MeshOptions coarse;
    coarse.angle_step_deg = 8;
    coarse.arc_step_deg = 8;
    const double oracle = module_oracle(d);
    const double e_coarse = std::abs(audit_mesh(mesh_module(d, coarse)).volume - oracle);
    const double e_fine = std::abs(audit_mesh(mesh_module(d)).volume - oracle);
    CHECK(e_fine < e_coarse);
  }

  TEST_CASE("grid of designs stays watertight and matches the oracle") {
    for (const ModuleDesign& d : {ModuleDesign{2, 0.6, 4, 2.5}, ModuleDesign{10, 2.5, 20, 12},
                                  ModuleDesign{6, 2.2, 8.8, 10}, ModuleDesign{4, 1.9, 7, 8}}) {
      CAPTURE(d.r_in);
      CAPTURE(d.t);
      const auto a = audit_mesh(mesh_module(d));
      CHECK(a.ok());
      CHECK(a.euler_characteristic == 0);
      CHECK(a.volume == doctest::Approx(module_oracle(d)).epsilon(0.005));
    }
  }

  TEST_CASE("thicker walls hold more material") {
    double prev = 0.0;
    for (double t : {0.8, 1.2, 1.6, 2.0}) {
      const double v = audit_mesh(mesh_module(ModuleDesign{5, t, 8, 10})).volume;
      CHECK(v > prev);
      prev = v;
    }
  }

  TEST_CASE("actuator mesh is a closed solid with the stack height") {
    ActuatorSpec a;
    a.modules.assign(8, ModuleDesign{});
    a.rotations_rad.assign(7, 0.0);
    const auto audit = audit_mesh(mesh_actuator(a));
    CHECK(audit.ok());
    CHECK(audit.euler_characteristic == 2);
    CHECK(audit.max.z() - audit.min.z() == doctest::Approx(80.0));
  }

  TEST_CASE("twisted and rigid modules keep the mesh closed") {
    ActuatorSpec a;
    a.modules = {ModuleDesign{}, ModuleDesign{}, ModuleDesign{5, 1.5, 8, 10, true}, ModuleDesign{}};
    a.rotations_rad = {std::numbers::pi / 2, 0.3, -1.0};
    const auto audit = audit_mesh(mesh_actuator(a));
    CHECK(audit.ok());
    CHECK(audit.euler_characteristic == 2);
    // A quarter-turn twist rotates the fan: the volume is unchanged.
    ActuatorSpec b = a;
    b.rotations_rad = {0.0, 0.0, 0.0};
    CHECK(audit_mesh(mesh_actuator(b)).volume == doctest::Approx(audit.volume).epsilon(1e-3));
  }

  TEST_CASE("port fits inside the bore") {
    for (const ModuleDesign& d : {ModuleDesign{}, ModuleDesign{2, 0.6, 4, 2.5}, ModuleDesign{4, 1.9, 7, 8}}) {
      CHECK(port_radius(d) > 0.0);
      CHECK(port_radius(d) < d.r_in - d.t);
    }
  }

  TEST_CASE("invalid designs and options") {
    CHECK_THROWS_AS(mesh_module(ModuleDesign{5, 3, 8, 10}), ValidationError);
    MeshOptions bad;
    bad.angle_step_deg = 0.0;
    CHECK_THROWS_AS(mesh_module(ModuleDesign{}, bad), ValidationError);
  }
}
