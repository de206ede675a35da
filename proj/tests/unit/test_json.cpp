#include <doctest.h>

#include <cmath>

#include "bellow/error.hpp"
#include "bellow/json_io.hpp"

using namespace bellow;

TEST_SUITE("json") {
  TEST_CASE("actuator round trip") {
    ActuatorSpec a;
    a.modules = {ModuleDesign{}, ModuleDesign{5, 1.5, 8, 10, true}};
    a.rotations_rad = {0.1 + 0.2};
    a.pressure_kpa = 7.25;
    a.material.youngs_modulus_kpa = 600;
    CHECK(actuator_from_json(parse_json(dump_json(to_json(a)))) == a);
  }

  TEST_CASE("rotations default to zero") {
    const auto a = actuator_from_json(parse_json(R"({"modules":[{"r_in":5,"t":1.5,"R":8,"l":10},{"r_in":5,"t":1.5,"R":8,"l":10}]})"));
    CHECK(a.rotations_rad == std::vector<double>{0.0});
    CHECK(a.material == agilus30());
  }

  TEST_CASE("segments accept a bare array or an object") {
    const std::vector<ArcSegment> s = {{10, 0.01, 0.5, SegmentKind::arc}, {5, 0, 0, SegmentKind::line}};
    const Json arr = to_json(std::span<const ArcSegment>(s));
    CHECK(segments_from_json(arr) == s);
    CHECK(segments_from_json(Json{{"segments", arr}}) == s);
    CHECK(segment_from_json(parse_json(R"({"L":3,"kappa":0})")).kind == SegmentKind::line);
    CHECK_THROWS_AS(segment_from_json(parse_json(R"({"L":3,"kappa":0,"kind":"spiral"})")), FormatError);
  }

  TEST_CASE("match result round trip, non-finite costs become null") {
    MatchResult r;
    r.feasible = false;
    r.violations = {"P_max > 0"};
    r.x = {5, 1.5, 0.0};
    r.segments = {SegmentMatch{{40, 0.02, 0, SegmentKind::arc}, 8, 10, 4, 0.2, NAN, 0.0, false}};
    r.mean_cost = INFINITY;
    r.kappa_max = 0.02;
    r.seed = 18446744073709551615ULL;
    r.best_cost_history = {0.5, 0.25};
    const Json j = to_json(r);
    CHECK(j["mean_cost"].is_null());
    CHECK(j["segments"][0]["cost"].is_null());
    const MatchResult back = match_result_from_json(parse_json(dump_json(j)));
    CHECK(back.seed == r.seed);
    CHECK(back.violations == r.violations);
    CHECK(std::isnan(back.segments[0].cost));
    CHECK(dump_json(to_json(back)) == dump_json(j));
  }

  TEST_CASE("problem round trip") {
    MatchProblem p;
    p.segments = {{40, 0.02, 0, SegmentKind::arc}};
    p.kappa_max = 0.05;
    p.r_ou_min = 6;
    p.r_ou_max = 30;
    p.budget = {60, 10};
    p.seed = 7;
    const MatchProblem q = problem_from_json(parse_json(dump_json(to_json(p))));
    CHECK(q.segments == p.segments);
    CHECK(q.kappa_max == p.kappa_max);
    CHECK(q.budget == p.budget);
    CHECK(q.seed == 7);
    CHECK(dump_json(to_json(q)) == dump_json(to_json(p)));
  }

  TEST_CASE("shape files") {
    CHECK(read_shape("x,y,z\n0,0,0\n1,2,3\n").size() == 2);
    CHECK(read_shape("0 0 0\r\n1 2 3\r\n").size() == 2);
    CHECK(read_shape("[[0,0,0],[1,2,3]]")[1] == Vec3(1, 2, 3));
    CHECK(read_shape(R"({"points":[{"x":1,"y":2,"z":3}]})")[0] == Vec3(1, 2, 3));
    CHECK_THROWS_AS(read_shape("0,0,0\n1,2\n"), FormatError);
    CHECK_THROWS_AS(read_shape(""), FormatError);
    CHECK_THROWS_AS(read_shape("[[0,0]]"), FormatError);
  }

  TEST_CASE("malformed input") {
    CHECK_THROWS_AS(parse_json("{"), FormatError);
    CHECK_THROWS_AS(module_from_json(parse_json(R"({"r_in":5})")), FormatError);
    CHECK_THROWS_AS(module_from_json(parse_json(R"({"r_in":"5","t":1,"R":8,"l":10})")), FormatError);
    CHECK_THROWS_AS(model_from_json(parse_json(R"({"format":"other"})")), FormatError);
  }
}
