#include <doctest.h>

#include <cmath>

#include "bellow/error.hpp"
#include "bellow/pipeline.hpp"
#include "fixtures.hpp"

using namespace bellow;

TEST_SUITE("pipeline") {
  TEST_CASE("default actuator") {
    const auto a = pipeline::default_actuator(8);
    CHECK(a.modules.size() == 8);
    CHECK(a.rotations_rad.size() == 7);
    CHECK(validate_actuator(a).ok());
    CHECK_THROWS_AS(pipeline::default_actuator(0), ValidationError);
  }

  TEST_CASE("unpressurized simulation is straight and needs no model") {
    const auto s = pipeline::simulate(pipeline::default_actuator(8), nullptr);
    for (const auto& p : s.centerline) {
      CHECK(std::abs(p.x()) < 1e-12);
      CHECK(std::abs(p.y()) < 1e-12);
    }
    CHECK(s.tips.back().translation().z() == doctest::Approx(80.0));
  }

  TEST_CASE("pressurized simulation uses the surrogate") {
    auto a = pipeline::default_actuator(8);
    a.pressure_kpa = 10.0;
    CHECK_THROWS_AS(pipeline::simulate(a, nullptr), NotFoundError);
    const auto& m = testing::shared_model();
    const auto s = pipeline::simulate(a, &m);
    const auto th = predict_thetas(m, a);
    CHECK(s.thetas == th);
    const auto tips = forward_kinematics(a, th);
    CHECK((s.centerline.back() - tips.back().translation()).norm() < 1e-12);
    CHECK(s.centerline.back().x() > 1.0);
    const Json j = pipeline::to_json(s);
    CHECK(j["centerline"].size() == s.centerline.size());
    CHECK(pipeline::centerline_csv(s).rfind("x,y,z\n", 0) == 0);
  }

  TEST_CASE("segmentation report") {
    const auto seg = pipeline::segment_shape(testing::s_fixture(), 0.2);
    CHECK(seg.result.segments.size() == 2);
    CHECK(seg.max_deviation <= 0.2 + seg.result.fit_residual + 1e-6);
    const Json j = pipeline::to_json(seg);
    CHECK(j["segments"].size() == 2);
    CHECK(j["points"] == 200);
  }

  TEST_CASE("dataset text round trip") {
    const auto rows = generate_dataset(DatasetGrid{{2, 4, 2}, {0, 1, 1}}, agilus30());
    CHECK(pipeline::dataset_from_text(pipeline::dataset_text(rows)) == rows);
  }

  TEST_CASE("STL bytes for the default stack") {
    const std::string stl = pipeline::stl_bytes(pipeline::default_actuator(2));
    CHECK(stl.size() > 84);
    CHECK((stl.size() - 84) % 50 == 0);
  }
}
