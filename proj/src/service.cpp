#include "bellow/service.hpp"

#include <cstdlib>

#include "bellow/error.hpp"
#include "bellow/json_io.hpp"
#include "bellow/pipeline.hpp"
#include "bellow/simd/kernels.hpp"

// After Eigen: a system header pulled in here defines macros Eigen trips on.
#include <httplib.h>

namespace bellow {

namespace {

constexpr const char* kJson = "application/json";

int status_for(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "conflict") return 409;
  if (code == "io_error" || code == "internal") return 500;
  return 400;
}

Json error_json(const std::string& code, const std::string& message, const std::vector<std::string>& violations) {
  Json j;
  j["error"] = {{"code", code}, {"message", message}, {"violations", violations}};
  return j;
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message,
                const std::vector<std::string>& violations = {}) {
  res.status = status_for(code);
  res.set_content(dump_json(error_json(code, message, violations)) + '\n', kJson);
}

void send_json(httplib::Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(dump_json(j) + '\n', kJson);
}

// Maps engine exceptions onto error payloads.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ValidationError& e) {
      send_error(res, e.code(), e.what(), e.violations());
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, "internal", e.what());
    }
  };
}

Json body_json(const httplib::Request& req) {
  Json j = parse_json(req.body.empty() ? "{}" : req.body);
  if (!j.is_object()) throw FormatError("request body must be a JSON object");
  return j;
}

const Json& require(const Json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

Json job_json(const JobRecord& r) {
  Json j;
  j["id"] = r.id;
  j["kind"] = to_string(r.kind);
  j["state"] = to_string(r.state);
  j["progress"] = r.progress;
  if (r.result) {
    j["result"] = *r.result;
    j["result_url"] = std::string(r.kind == JobKind::train ? "/api/models/" : "/api/results/") + *r.result;
  } else {
    j["result"] = nullptr;
  }
  j["error"] = r.error ? error_json(r.error->code, r.error->message, r.error->violations)["error"] : Json(nullptr);
  j["log"] = r.log;
  return j;
}

SurrogateModel stored_model(const ProjectStore& store, const std::string& hash) {
  return model_from_json(parse_json(store.read(ArtifactKind::model, hash)));
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  if (const char* s = std::getenv("BELLOW_STORE")) c.store = s;
  if (const char* s = std::getenv("BELLOW_HOST")) c.host = s;
  if (const char* s = std::getenv("BELLOW_PORT")) c.port = std::atoi(s);
  return c;
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)),
      store_(config_.store),
      jobs_(config_.limits),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (config_.port == 0) return server_->bind_to_any_port(config_.host);
  return server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool Service::serve() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_->is_running()) server_->stop();
}

void Service::routes() {
  auto& s = *server_;

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_error(res, "not_found", "no route for " + req.method + " " + req.path);
    } else {
      const int status = res.status;
      send_error(res, "http_error", "HTTP " + std::to_string(status));
      res.status = status;
    }
  });

  s.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
          Json j;
          j["status"] = "ok";
          j["simd"] = simd::isa_name(simd::active_kernels().isa);
          j["store"] = store_.root().string();
          send_json(res, j);
        }));

  s.Post("/api/segment", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_json(req);
           if (!require(body, "tolerance").is_number()) throw FormatError("'tolerance' must be a number");
           const double tol = body.at("tolerance").get<double>();
           std::string shape_text;
           std::vector<Vec3> points;
           if (body.contains("shape")) {
             shape_text = require(body, "shape").get<std::string>();
             points = read_shape(shape_text);
           } else {
             points = points_from_json(require(body, "points"));
             shape_text = dump_json(to_json(std::span<const Vec3>(points))) + '\n';
           }
           const auto seg = pipeline::segment_shape(points, tol);
           const Artifact shape = store_.put(ArtifactKind::shape, shape_text, body.contains("shape") ? "csv" : "json");
           res.set_header("X-Artifact-Hash", shape.hash);
           send_json(res, pipeline::to_json(seg));
         }));

  s.Post("/api/simulate", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_json(req);
           ActuatorSpec a = actuator_from_json(require(body, "spec"));
           if (body.contains("pressure_kpa")) a.pressure_kpa = require(body, "pressure_kpa").get<double>();
           const int samples = body.value("samples_per_module", 16);
           std::optional<SurrogateModel> model;
           if (body.contains("model")) model = stored_model(store_, body.at("model").get<std::string>());
           send_json(res, pipeline::to_json(pipeline::simulate(a, model ? &*model : nullptr, samples)));
         }));

  s.Post("/api/mesh", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_json(req);
           const ActuatorSpec a = actuator_from_json(require(body, "spec"));
           MeshOptions o;
           o.angle_step_deg = body.value("angle_step_deg", o.angle_step_deg);
           o.arc_step_deg = body.value("arc_step_deg", o.arc_step_deg);
           const std::string stl = pipeline::stl_bytes(a, o);
           const Artifact mesh = store_.put(ArtifactKind::mesh, stl, "stl");
           res.set_header("X-Artifact-Hash", mesh.hash);
           res.set_content(stl, "model/stl");
         }));

  s.Post("/api/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_json(req);
           const Material m = body.contains("material") ? material_from_json(body.at("material")) : agilus30();
           const auto rows = generate_dataset(DatasetGrid{}, m);
           const Artifact a = store_.put(ArtifactKind::dataset, pipeline::dataset_text(rows), "csv");
           send_json(res, {{"hash", a.hash}, {"rows", rows.size()}}, 201);
         }));

  s.Get("/api/datasets/([0-9a-f]+)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          res.set_content(store_.read(ArtifactKind::dataset, req.matches[1]), "text/csv");
        }));

  s.Get("/api/models", guarded([this](const httplib::Request&, httplib::Response& res) {
          Json list = Json::array();
          for (const auto& a : store_.list(ArtifactKind::model)) {
            const SurrogateModel m = stored_model(store_, a.hash);
            list.push_back({{"hash", a.hash}, {"label", a.label}, {"bytes", a.bytes}, {"report", to_json(m.report)}});
          }
          send_json(res, {{"models", list}});
        }));

  s.Get("/api/models/([0-9a-f]+)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          res.set_content(store_.read(ArtifactKind::model, req.matches[1]), kJson);
        }));

  s.Post("/api/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const SurrogateModel m = model_from_json(parse_json(req.body));
           // Stored as sent so the file hash matches the uploader's copy.
           const Artifact a = store_.put(ArtifactKind::model, req.body, "json", "uploaded");
           send_json(res, {{"hash", a.hash}, {"report", to_json(m.report)}}, 201);
         }));

  s.Post("/api/train", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_json(req);
           std::string dataset;
           if (body.contains("dataset")) {
             dataset = store_.read(ArtifactKind::dataset, body.at("dataset").get<std::string>());
           } else {
             const Material m = body.contains("material") ? material_from_json(body.at("material")) : agilus30();
             dataset = pipeline::dataset_text(generate_dataset(DatasetGrid{}, m));
             store_.put(ArtifactKind::dataset, dataset, "csv");
           }
           auto rows = pipeline::dataset_from_text(dataset);
           TrainOptions o;
           o.seed = body.value("seed", o.seed);
           o.epochs = body.value("epochs", o.epochs);
           o.split_ratio = body.value("split", o.split_ratio);
           o.lambda = body.value("lambda", o.lambda);
           if (o.epochs < 1) throw ValidationError("invalid training options", {"epochs >= 1"});
           const std::string id = jobs_.submit(JobKind::train, [this, rows = std::move(rows), o](JobContext& ctx) {
             TrainOptions opts = o;
             opts.progress = [&ctx](int epoch, int epochs, double loss) {
               ctx.progress(static_cast<double>(epoch) / epochs);
               ctx.log("epoch " + std::to_string(epoch) + " loss " + std::to_string(loss));
             };
             auto [model, report] = train(rows, opts);
             ctx.log("test_mse " + std::to_string(report.test_mse));
             return store_.put(ArtifactKind::model, model_text(model), "json", "seed=" + std::to_string(o.seed)).hash;
           });
           res.set_header("Location", "/api/jobs/" + id);
           send_json(res, job_json(*jobs_.get(id)), 202);
         }));

  s.Post("/api/optimize", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_json(req);
           MatchProblem problem = problem_from_json(require(body, "problem"));
           validate_problem(problem);
           SurrogateModel model = stored_model(store_, require(body, "model").get<std::string>());
           const std::string id = jobs_.submit(JobKind::optimize, [this, problem, model](JobContext& ctx) {
             const auto result = optimize(problem, model, [&ctx](int it, int budget, double best) {
               ctx.progress(static_cast<double>(it) / budget);
               if (it % 10 == 0 || it == budget) {
                 ctx.log("iteration " + std::to_string(it) + " best " + std::to_string(best));
               }
             });
             ctx.log(result.feasible ? "feasible" : "infeasible");
             return store_.put(ArtifactKind::result, pipeline::match_text(result), "json").hash;
           });
           res.set_header("Location", "/api/jobs/" + id);
           send_json(res, job_json(*jobs_.get(id)), 202);
         }));

  s.Get("/api/jobs", guarded([this](const httplib::Request&, httplib::Response& res) {
          Json list = Json::array();
          for (const auto& r : jobs_.list()) list.push_back(job_json(r));
          send_json(res, {{"jobs", list}});
        }));

  s.Get("/api/jobs/([A-Za-z0-9-]+)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto r = jobs_.get(req.matches[1]);
          if (!r) throw NotFoundError("no job '" + std::string(req.matches[1]) + "'");
          send_json(res, job_json(*r));
        }));

  s.Get("/api/results/([0-9a-f]+)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          res.set_content(store_.read(ArtifactKind::result, req.matches[1]), kJson);
        }));
}

}  // namespace bellow
