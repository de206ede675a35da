#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "bellow/json_io.hpp"
#include "bellow/pipeline.hpp"
#include "bellow/stl.hpp"
#include "fixtures.hpp"

using namespace bellow;
namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("BELLOW_CLI");
  return p ? p : "";
}

// Exit status of the CLI with stdout/stderr redirected into `dir`.
int run(const fs::path& dir, const std::string& args) {
  const std::string cmd = "'" + cli() + "' " + args + " > '" + (dir / "stdout").string() + "' 2> '" +
                          (dir / "stderr").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("dataset gen is deterministic and has the grid") {
    if (cli().empty()) return;
    const auto dir = testing::scratch_dir("cli-dataset");
    REQUIRE(run(dir, "dataset gen --out " + q(dir / "a.csv")) == 0);
    REQUIRE(run(dir, "dataset gen --out " + q(dir / "b.csv")) == 0);
    const std::string a = testing::read_file(dir / "a.csv");
    CHECK(a == testing::read_file(dir / "b.csv"));
    CHECK(a.rfind("r_in,t,R,l,P,theta\n", 0) == 0);
    CHECK(testing::read_file(dir / "stderr").find(" rows") != std::string::npos);

    testing::write_file(dir / "mat.json", R"({"youngs_modulus_kpa": -1})");
    CHECK(run(dir, "dataset gen --material " + q(dir / "mat.json") + " --out " + q(dir / "c.csv")) == 1);
  }

  TEST_CASE("train is reproducible and checks the schema") {
    if (cli().empty()) return;
    const auto dir = testing::scratch_dir("cli-train");
    const std::string ds = std::getenv("BELLOW_TEST_DATASET");
    REQUIRE(run(dir, "train --quiet --epochs 3 --seed 3 --dataset '" + ds + "' --out " + q(dir / "m1.json")) == 0);
    const Json report = parse_json(testing::read_file(dir / "stdout"));
    CHECK(report.contains("test_mse"));
    REQUIRE(run(dir, "train --quiet --epochs 3 --seed 3 --dataset '" + ds + "' --out " + q(dir / "m2.json")) == 0);
    CHECK(testing::read_file(dir / "m1.json") == testing::read_file(dir / "m2.json"));

    testing::write_file(dir / "bad.csv", "r_in,t,R,l,P\n1,2,3,4,5\n");
    CHECK(run(dir, "train --dataset " + q(dir / "bad.csv") + " --out " + q(dir / "m3.json")) == 1);
    CHECK(testing::read_file(dir / "stderr").find("malformed_input") != std::string::npos);
  }

  TEST_CASE("segment, match, assemble, fk, stl") {
    if (cli().empty()) return;
    const auto dir = testing::scratch_dir("cli-pipeline");
    testing::write_csv(dir / "s.csv", testing::s_fixture());
    REQUIRE(run(dir, "segment --shape " + q(dir / "s.csv") + " --tol 0.2 --out " + q(dir / "seg.json")) == 0);
    const Json seg = parse_json(testing::read_file(dir / "seg.json"));
    CHECK(seg["segments"].size() == 2);

    const std::string model = q(testing::shared_model_path());
    const std::string match = "match --segments " + q(dir / "seg.json") + " --model " + model +
                              " --pmax 10 --rout-min 6 --rout-max 30 --seed 4 --budget 12/5";
    REQUIRE(run(dir, match + " --out " + q(dir / "r1.json")) == 0);
    REQUIRE(run(dir, match + " --out " + q(dir / "r2.json")) == 0);
    CHECK(testing::read_file(dir / "r1.json") == testing::read_file(dir / "r2.json"));
    REQUIRE(run(dir, match) == 0);
    CHECK(testing::read_file(dir / "stdout") == testing::read_file(dir / "r1.json"));

    // Infeasible is distinguished from a crash.
    CHECK(run(dir, "match --segments " + q(dir / "seg.json") + " --model " + model +
                       " --pmax 0 --rout-min 6 --rout-max 30 --budget 3/3 --out " + q(dir / "r0.json")) == 2);
    CHECK(parse_json(testing::read_file(dir / "r0.json"))["feasible"] == false);
    CHECK(run(dir, "match --segments " + q(dir / "missing.json") + " --model " + model) == 1);
    CHECK(run(dir, "match --segments " + q(dir / "seg.json") + " --model " + model + " --budget x") == 1);

    REQUIRE(run(dir, "assemble --result " + q(dir / "r1.json") + " --out " + q(dir / "spec.json")) == 0);
    const ActuatorSpec spec = actuator_from_json(parse_json(testing::read_file(dir / "spec.json")));
    CHECK(validate_actuator(spec).ok());
    CHECK(run(dir, "assemble --result " + q(dir / "r0.json")) == 1);

    REQUIRE(run(dir, "fk --spec " + q(dir / "spec.json") + " --model " + model + " --out " + q(dir / "fk.csv")) == 0);
    const auto pts = read_shape(testing::read_file(dir / "fk.csv"));
    const auto sim = pipeline::simulate(spec, &testing::shared_model());
    CHECK((pts.back() - sim.centerline.back()).norm() < 1e-9);

    REQUIRE(run(dir, "stl --spec " + q(dir / "spec.json") + " --angle-step 6 --out " + q(dir / "a.stl")) == 0);
    CHECK(fs::file_size(dir / "a.stl") > 84);
  }

  TEST_CASE("default spec meshes to an 80 mm straight solid") {
    if (cli().empty()) return;
    const auto dir = testing::scratch_dir("cli-stl");
    REQUIRE(run(dir, "spec --modules 8 --out " + q(dir / "spec.json")) == 0);
    REQUIRE(run(dir, "stl --spec " + q(dir / "spec.json") + " --out " + q(dir / "a.stl")) == 0);
    const auto mesh = read_stl((dir / "a.stl").string());
    double lo = 1e9, hi = -1e9;
    for (const auto& v : mesh.vertices) {
      lo = std::min(lo, v.z());
      hi = std::max(hi, v.z());
    }
    CHECK(hi - lo == doctest::Approx(80.0));
    REQUIRE(run(dir, "fk --spec " + q(dir / "spec.json") + " --pressure 0") == 0);
    for (const auto& p : read_shape(testing::read_file(dir / "stdout"))) CHECK(std::abs(p.x()) < 1e-12);
    // Pressure without a model.
    CHECK(run(dir, "fk --spec " + q(dir / "spec.json") + " --pressure 5") == 1);
    REQUIRE(run(dir, "stl --ascii --angle-step 10 --spec " + q(dir / "spec.json") + " --out " + q(dir / "a.txt")) == 0);
    CHECK(testing::read_file(dir / "a.txt").rfind("solid", 0) == 0);
  }

  TEST_CASE("usage errors") {
    if (cli().empty()) return;
    const auto dir = testing::scratch_dir("cli-usage");
    CHECK(run(dir, "") == 1);
    CHECK(run(dir, "frobnicate") == 1);
    CHECK(run(dir, "--help") == 0);
  }
}
