#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bellow/error.hpp"
#include "bellow/oracle.hpp"
#include "bellow/shape_match.hpp"
#include "fixtures.hpp"

using namespace bellow;

namespace {

// Single arc produced by n modules of a known design.
MatchProblem planted(const SurrogateModel& m, const ModuleDesign& d, double P, int n) {
  const double theta = m.theta(d, P);
  MatchProblem p;
  p.segments = {ArcSegment{n * d.l, theta / d.l, 0.0, SegmentKind::arc}};
  p.r_ou_min = 6.0;
  p.r_ou_max = 30.0;
  p.budget = {40, 8};
  return p;
}

// Satisfies the matching constraints (R <= 4t, 4t <= l < 4(R - r_in)).
const ModuleDesign kPlant{6.0, 2.2, 8.8, 10.0};

}  // namespace

TEST_SUITE("shape_match") {
  TEST_CASE("module count rounds to the nearest multiple") {
    CHECK(module_count(100, 10) == 10);
    CHECK(module_count(104, 10) == 10);
    CHECK(module_count(106, 10) == 11);
    CHECK(module_count(3, 10) == 1);
  }

  TEST_CASE("cost is zero at the planted design") {
    const auto& m = testing::shared_model();
    const ModuleDesign d = kPlant;
    const auto p = planted(m, d, 6.0, 8);
    CHECK(segment_cost({d.r_in, d.t, 6.0}, {d.R, d.l}, p.segments[0], m) < 1e-12);
    CHECK(segment_cost({d.r_in, d.t, 6.0}, {d.R, 11.0}, p.segments[0], m) > 0.05);
  }

  TEST_CASE("constraint rows are reported by name") {
    const ArcSegment seg{80, 0.01, 0, SegmentKind::arc};
    CHECK(feasibility_violations({6, 2.2, 5}, {8.8, 10}, seg, 10, 0.02).empty());
    const auto v = feasibility_violations({5, 3, 12}, {8, 10}, seg, 10, 0.02);
    CHECK(v.size() >= 2);
    bool saw_p = false, saw_l = false;
    for (const auto& s : v) {
      saw_p |= s.find("P <= P_max") != std::string::npos;
      saw_l |= s.find("4t") != std::string::npos;
    }
    CHECK(saw_p);
    CHECK(saw_l);
    CHECK_THROWS_AS(segment_cost({5, 3, 5}, {8, 10}, seg, testing::shared_model()), ValidationError);
  }

  TEST_CASE("lower box points are feasible") {
    const SharedParams x{6, 2.2, 5};
    const ArcSegment seg{80, 0.01, 0, SegmentKind::arc};
    const auto box = lower_box(x, seg, 6, 30);
    REQUIRE(box);
    for (double u : {0.0, 0.3, 1.0}) {
      for (double v : {0.0, 0.5, 0.999}) {
        const auto y = box->at(u, v);
        CHECK(feasibility_violations(x, y, seg, 10, 0.01).empty());
      }
    }
  }

  TEST_CASE("plant and recover") {
    const auto& m = testing::shared_model();
    const auto p = planted(m, kPlant, 6.0, 8);
    const auto r = optimize(p, m);
    CHECK(r.feasible);
    CHECK(r.mean_cost < 0.05);
    REQUIRE(r.segments.size() == 1);
    const auto& s = r.segments[0];
    CHECK(feasibility_violations(r.x, {s.R, s.l}, s.segment, p.p_max, r.kappa_max).empty());
    CHECK(r.x.P <= p.p_max);
    for (std::size_t i = 1; i < r.best_cost_history.size(); ++i) {
      CHECK(r.best_cost_history[i] <= r.best_cost_history[i - 1]);
    }
  }

  TEST_CASE("fixed seed is reproducible, serial or parallel") {
    const auto& m = testing::shared_model();
    MatchProblem p;
    p.segments = {ArcSegment{60, 0.012, 0, SegmentKind::arc}, ArcSegment{20, 0, 0, SegmentKind::line},
                  ArcSegment{50, 0.015, 1.2, SegmentKind::arc}};
    p.r_ou_min = 6;
    p.r_ou_max = 30;
    p.budget = {15, 5};
    p.seed = 99;
    const auto a = optimize(p, m);
    p.parallel = false;
    const auto b = optimize(p, m);
    CHECK(a == b);
    REQUIRE(a.segments.size() == 3);
    CHECK(a.segments[1].rigid);
    CHECK(a.segments[1].cost == 0.0);
  }

  TEST_CASE("zero pressure bound is infeasible, not an error") {
    const auto& m = testing::shared_model();
    auto p = planted(m, kPlant, 6.0, 8);
    p.p_max = 0.0;
    const auto r = optimize(p, m);
    CHECK_FALSE(r.feasible);
    CHECK_FALSE(r.violations.empty());
    CHECK_THROWS_AS(assemble(r), ValidationError);
  }

  TEST_CASE("invalid problems are rejected") {
    MatchProblem p;
    CHECK_THROWS_AS(validate_problem(p), ValidationError);
    p.segments = {ArcSegment{10, 0, 0, SegmentKind::line}};
    p.r_ou_max = 20;
    CHECK_THROWS_AS(validate_problem(p), ValidationError);
  }

  TEST_CASE("assembled stack follows the segments") {
    const auto& m = testing::shared_model();
    MatchProblem p;
    p.segments = {ArcSegment{60, 0.012, 0, SegmentKind::arc}, ArcSegment{50, 0.015, std::numbers::pi / 2, SegmentKind::arc}};
    p.r_ou_min = 6;
    p.r_ou_max = 30;
    p.budget = {20, 6};
    const auto r = optimize(p, m);
    REQUIRE(r.feasible);
    const ActuatorSpec a = assemble(r);
    CHECK(validate_actuator(a).ok());
    std::size_t expect = 0;
    for (const auto& s : r.segments) expect += static_cast<std::size_t>(s.n);
    CHECK(a.modules.size() == expect);
    CHECK(a.pressure_kpa == r.x.P);
    CHECK(a.rotations_rad[static_cast<std::size_t>(r.segments[0].n) - 1] == doctest::Approx(std::numbers::pi / 2));
  }
}
