#include <doctest.h>

#include <chrono>
#include <thread>

#include "bellow/error.hpp"
#include "bellow/json_io.hpp"
#include "bellow/pipeline.hpp"
#include "bellow/service.hpp"
#include "bellow/stl.hpp"
#include "fixtures.hpp"

#include <httplib.h>

using namespace bellow;
using namespace std::chrono_literals;

namespace {

// Service on an ephemeral port for the lifetime of the fixture.
struct Running {
  std::unique_ptr<Service> service;
  std::thread thread;
  int port = -1;

  explicit Running(const std::string& name) {
    ServiceConfig c;
    c.store = testing::scratch_dir(name);
    c.port = 0;
    service = std::make_unique<Service>(c);
    port = service->bind();
    REQUIRE(port > 0);
    thread = std::thread([this] { service->serve(); });
  }
  ~Running() {
    service->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    return c;
  }
};

Json post(httplib::Client& c, const std::string& path, const Json& body, int expect) {
  auto r = c.Post(path, dump_json(body), "application/json");
  REQUIRE(r);
  CHECK(r->status == expect);
  return parse_json(r->body);
}

Json get(httplib::Client& c, const std::string& path, int expect = 200) {
  auto r = c.Get(path);
  REQUIRE(r);
  CHECK(r->status == expect);
  return parse_json(r->body);
}

Json wait_job(httplib::Client& c, const std::string& id) {
  for (int i = 0; i < 6000; ++i) {
    Json j = get(c, "/api/jobs/" + id);
    if (j["state"] == "done" || j["state"] == "failed") return j;
    std::this_thread::sleep_for(20ms);
  }
  FAIL("job did not finish");
  return {};
}

std::string upload_model(httplib::Client& c) {
  const std::string text = testing::read_file(testing::shared_model_path());
  auto r = c.Post("/api/models", text, "application/json");
  REQUIRE(r);
  REQUIRE(r->status == 201);
  return parse_json(r->body)["hash"].get<std::string>();
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("health and unknown routes") {
    Running s("svc-health");
    auto c = s.client();
    CHECK(get(c, "/api/health")["status"] == "ok");
    const Json e = get(c, "/api/nope", 404);
    CHECK(e["error"]["code"] == "not_found");
    CHECK(get(c, "/api/jobs/job-unknown", 404)["error"]["code"] == "not_found");
    CHECK(get(c, "/api/results/0123456789abcdef", 404)["error"]["code"] == "not_found");
  }

  TEST_CASE("simulate matches the engine") {
    Running s("svc-sim");
    auto c = s.client();
    const std::string model = upload_model(c);
    const auto spec = pipeline::default_actuator(8);
    const Json out = post(c, "/api/simulate", {{"spec", to_json(spec)}, {"pressure_kpa", 10.0}, {"model", model}}, 200);
    auto a = spec;
    a.pressure_kpa = 10.0;
    CHECK(dump_json(out) == dump_json(pipeline::to_json(pipeline::simulate(a, &testing::shared_model()))));
    // No model at nonzero pressure.
    CHECK(post(c, "/api/simulate", {{"spec", to_json(spec)}, {"pressure_kpa", 5.0}}, 404)["error"]["code"] == "not_found");
  }

  TEST_CASE("malformed spec lists the violated inequality") {
    Running s("svc-bad");
    auto c = s.client();
    Json spec = to_json(pipeline::default_actuator(2));
    spec["modules"][1]["t"] = 3.0;
    spec["modules"][0]["t"] = 3.0;
    const Json e = post(c, "/api/simulate", {{"spec", spec}}, 400);
    CHECK(e["error"]["code"] == "validation_failed");
    bool found = false;
    for (const auto& v : e["error"]["violations"]) found |= v.get<std::string>().find("l > 4t") != std::string::npos;
    CHECK(found);
    auto r = c.Post("/api/simulate", "{not json", "application/json");
    CHECK(r->status == 400);
    CHECK(parse_json(r->body)["error"]["code"] == "malformed_input");
  }

  TEST_CASE("segment endpoint") {
    Running s("svc-seg");
    auto c = s.client();
    const auto pts = testing::s_fixture();
    const Json out = post(c, "/api/segment", {{"points", to_json(std::span<const Vec3>(pts))}, {"tolerance", 0.2}}, 200);
    CHECK(out["segments"].size() == 2);
    CHECK(dump_json(out) == dump_json(pipeline::to_json(pipeline::segment_shape(pts, 0.2))));
    CHECK(s.service->store().list(ArtifactKind::shape).size() == 1);
    const auto noisy = testing::with_noise(pts, 0.5, 3);
    const Json e = post(c, "/api/segment", {{"points", to_json(std::span<const Vec3>(noisy))}, {"tolerance", 1e-9}}, 400);
    CHECK(e["error"]["code"] == "tolerance_unattainable");
  }

  TEST_CASE("mesh endpoint returns STL bytes") {
    Running s("svc-mesh");
    auto c = s.client();
    auto r = c.Post("/api/mesh", dump_json({{"spec", to_json(pipeline::default_actuator(2))}}), "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "model/stl");
    CHECK(r->body == pipeline::stl_bytes(pipeline::default_actuator(2)));
    CHECK(s.service->store().list(ArtifactKind::mesh).size() == 1);
  }

  TEST_CASE("optimize job lifecycle") {
    Running s("svc-opt");
    auto c = s.client();
    const std::string model = upload_model(c);
    MatchProblem p;
    p.segments = {ArcSegment{60, 0.012, 0, SegmentKind::arc}};
    p.r_ou_min = 6;
    p.r_ou_max = 30;
    p.budget = {12, 5};
    p.seed = 5;
    const Json job = post(c, "/api/optimize", {{"problem", to_json(p)}, {"model", model}}, 202);
    CHECK((job["state"] == "queued" || job["state"] == "running"));
    const Json done = wait_job(c, job["id"].get<std::string>());
    REQUIRE(done["state"] == "done");
    auto r = c.Get(done["result_url"].get<std::string>());
    REQUIRE(r);
    CHECK(r->body == pipeline::match_text(optimize(p, testing::shared_model())));

    // Validation happens before a job is created.
    p.r_ou_max = 1;
    CHECK(post(c, "/api/optimize", {{"problem", to_json(p)}, {"model", model}}, 400)["error"]["code"] ==
          "validation_failed");
    p.r_ou_max = 30;
    CHECK(post(c, "/api/optimize", {{"problem", to_json(p)}, {"model", "0000000000000000"}}, 404)["error"]["code"] ==
          "not_found");
  }

  TEST_CASE("train job stores a listed model") {
    Running s("svc-train");
    auto c = s.client();
    const Json ds = post(c, "/api/datasets", Json::object(), 201);
    const Json job = post(c, "/api/train", {{"dataset", ds["hash"]}, {"epochs", 3}, {"seed", 1}}, 202);
    const Json done = wait_job(c, job["id"].get<std::string>());
    REQUIRE(done["state"] == "done");
    CHECK(!done["log"].empty());
    const Json models = get(c, "/api/models");
    REQUIRE(models["models"].size() == 1);
    CHECK(models["models"][0]["hash"] == done["result"]);
    CHECK(models["models"][0]["report"]["epochs"].get<int>() <= 3);
    CHECK(post(c, "/api/train", {{"dataset", "0123456789abcdef"}}, 404)["error"]["code"] == "not_found");
  }

  TEST_CASE("store conflicts map to 409") {
    Running s("svc-conflict");
    auto c = s.client();
    const std::string hash = upload_model(c);
    const auto a = s.service->store().find(ArtifactKind::model, hash);
    testing::write_file(s.service->store().root() / a.file, "tampered");
    const std::string text = testing::read_file(testing::shared_model_path());
    auto r = c.Post("/api/models", text, "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(parse_json(r->body)["error"]["code"] == "conflict");
  }
}
