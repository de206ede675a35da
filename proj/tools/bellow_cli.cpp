// bellow: command-line driver for the design pipeline.
//
// Exit status: 0 success, 2 match finished without a feasible design,
// 1 any error (message and violated constraints on stderr).

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bellow/error.hpp"
#include "bellow/json_io.hpp"
#include "bellow/pipeline.hpp"
#include "bellow/service.hpp"
#include "bellow/stl.hpp"

using namespace bellow;

namespace {

constexpr int kExitInfeasible = 2;

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes << std::flush;
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path + "'");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing '" + path + "'");
}

MatchBudget parse_budget(const std::string& s) {
  MatchBudget b;
  const auto slash = s.find('/');
  try {
    std::size_t used = 0;
    b.upper_iters = std::stoi(s.substr(0, slash), &used);
    if (used != (slash == std::string::npos ? s.size() : slash)) throw std::invalid_argument(s);
    if (slash != std::string::npos) {
      b.lower_iters = std::stoi(s.substr(slash + 1), &used);
      if (used != s.size() - slash - 1) throw std::invalid_argument(s);
    }
  } catch (const std::logic_error&) {
    throw FormatError("--budget expects UPPER or UPPER/LOWER, got '" + s + "'");
  }
  return b;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bellow soft pneumatic actuator design pipeline"};
  app.require_subcommand(1);
  int exit_code = 0;

  // dataset gen
  auto* dataset = app.add_subcommand("dataset", "Deflection dataset tools");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Sweep the sampling grid with the deflection oracle");
  std::string material_path, dataset_out;
  gen->add_option("--material", material_path, "Material JSON (default Agilus30)");
  gen->add_option("--out", dataset_out, "Output CSV (default stdout)");
  gen->callback([&] {
    const Material m = material_path.empty() ? agilus30() : material_from_json(parse_json(slurp(material_path)));
    const auto rep = validate_material(m);
    if (!rep.ok()) throw ValidationError("invalid material", rep.violations);
    const auto rows = generate_dataset(DatasetGrid{}, m);
    emit(dataset_out, pipeline::dataset_text(rows));
    std::cerr << rows.size() << " rows\n";
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the surrogate network");
  std::string train_dataset, model_out, report_out;
  TrainOptions topts;
  bool quiet = false;
  train_cmd->add_option("--dataset", train_dataset, "Dataset CSV")->required();
  train_cmd->add_option("--seed", topts.seed, "Split and initialization seed")->capture_default_str();
  train_cmd->add_option("--epochs", topts.epochs, "Maximum epochs")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--split", topts.split_ratio, "Training fraction")->capture_default_str()->check(CLI::Range(0.05, 0.95));
  train_cmd->add_option("--lambda", topts.lambda, "Weight penalty")->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--out", model_out, "Model JSON")->required();
  train_cmd->add_option("--report", report_out, "Also write the report with loss history here");
  train_cmd->add_flag("--quiet", quiet, "No progress on stderr");
  train_cmd->callback([&] {
    const auto rows = pipeline::dataset_from_text(slurp(train_dataset));
    if (!quiet) {
      topts.progress = [](int epoch, int epochs, double loss) {
        if (epoch % 50 == 0 || epoch == epochs) std::cerr << "epoch " << epoch << " loss " << loss << '\n';
      };
    }
    auto [model, report] = train(rows, topts);
    emit(model_out, model_text(model));
    if (!report_out.empty()) emit(report_out, dump_json(to_json(report, true)) + '\n');
    std::cout << dump_json(to_json(report)) << '\n';
  });

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "Split a 3D curve into constant-curvature segments");
  std::string shape_path, seg_out;
  double tol = 0.5;
  seg_cmd->add_option("--shape", shape_path, "Point file, CSV x,y,z or JSON")->required();
  seg_cmd->add_option("--tol", tol, "Deviation tolerance, mm")->capture_default_str();
  seg_cmd->add_option("--out", seg_out, "Segments JSON (default stdout)");
  seg_cmd->callback([&] {
    const auto seg = pipeline::segment_shape(read_shape(slurp(shape_path)), tol);
    emit(seg_out, dump_json(pipeline::to_json(seg)) + '\n');
  });

  // match
  auto* match_cmd = app.add_subcommand("match", "Bi-level search for a design matching the segments");
  std::string segments_path, model_path, match_out, budget_str = "1000/15";
  MatchProblem problem;
  problem.r_ou_min = 6.0;
  problem.r_ou_max = 30.0;
  double kappa_max = 0.0;
  match_cmd->add_option("--segments", segments_path, "Segments JSON")->required();
  match_cmd->add_option("--model", model_path, "Surrogate model JSON")->required();
  match_cmd->add_option("--pmax", problem.p_max, "Pressure bound, kPa")->capture_default_str();
  match_cmd->add_option("--rout-min", problem.r_ou_min, "Outer radius lower bound, mm")->capture_default_str();
  match_cmd->add_option("--rout-max", problem.r_ou_max, "Outer radius upper bound, mm")->capture_default_str();
  match_cmd->add_option("--kappa-max", kappa_max, "Curvature bound, 1/mm (default: largest arc curvature)");
  match_cmd->add_option("--seed", problem.seed, "Search seed")->capture_default_str();
  match_cmd->add_option("--budget", budget_str, "UPPER or UPPER/LOWER iterations")->capture_default_str();
  match_cmd->add_option("--target", problem.target_cost, "Stop once the mean cost is below this")->capture_default_str();
  match_cmd->add_option("--out", match_out, "MatchResult JSON (default stdout)");
  match_cmd->callback([&] {
    problem.segments = segments_from_json(parse_json(slurp(segments_path)));
    problem.budget = parse_budget(budget_str);
    if (match_cmd->count("--kappa-max")) problem.kappa_max = kappa_max;
    const SurrogateModel model = model_from_json(parse_json(slurp(model_path)));
    const MatchResult r = optimize(problem, model);
    emit(match_out, pipeline::match_text(r));
    if (!r.feasible) {
      std::cerr << "infeasible:";
      for (const auto& v : r.violations) std::cerr << "\n  " << v;
      std::cerr << '\n';
      exit_code = kExitInfeasible;
    }
  });

  // assemble
  auto* asm_cmd = app.add_subcommand("assemble", "Module stack for a feasible MatchResult");
  std::string result_path, asm_material, spec_out;
  asm_cmd->add_option("--result", result_path, "MatchResult JSON")->required();
  asm_cmd->add_option("--material", asm_material, "Material JSON (default Agilus30)");
  asm_cmd->add_option("--out", spec_out, "Actuator spec JSON (default stdout)");
  asm_cmd->callback([&] {
    const MatchResult r = match_result_from_json(parse_json(slurp(result_path)));
    const Material m = asm_material.empty() ? agilus30() : material_from_json(parse_json(slurp(asm_material)));
    emit(spec_out, to_json(assemble(r, m)).dump(1) + '\n');
  });

  // spec
  auto* spec_cmd = app.add_subcommand("spec", "Write a straight actuator of default modules");
  int spec_modules = 8;
  std::string default_out;
  spec_cmd->add_option("--modules", spec_modules, "Module count")->capture_default_str();
  spec_cmd->add_option("--out", default_out, "Actuator spec JSON (default stdout)");
  spec_cmd->callback([&] { emit(default_out, to_json(pipeline::default_actuator(spec_modules)).dump(1) + '\n'); });

  // stl
  auto* stl_cmd = app.add_subcommand("stl", "Printable mesh of an actuator spec");
  std::string stl_spec, stl_out;
  MeshOptions mesh_opts;
  bool ascii = false;
  stl_cmd->add_option("--spec", stl_spec, "Actuator spec JSON")->required();
  stl_cmd->add_option("--out", stl_out, "Output STL")->required();
  stl_cmd->add_option("--angle-step", mesh_opts.angle_step_deg, "Revolution step, degrees")->capture_default_str()->check(CLI::Range(0.1, 30.0));
  stl_cmd->add_flag("--ascii", ascii, "ASCII instead of binary STL");
  stl_cmd->callback([&] {
    const ActuatorSpec a = actuator_from_json(parse_json(slurp(stl_spec)));
    MeshAudit audit;
    const TriangleMesh mesh = pipeline::checked_mesh(a, mesh_opts, &audit);
    std::ostringstream os(std::ios::binary);
    if (ascii) {
      write_stl_ascii(os, mesh);
    } else {
      write_stl(os, mesh);
    }
    emit(stl_out, os.str());
    std::cerr << audit.faces << " triangles, volume " << audit.volume << " mm^3, z " << audit.min.z() << ".."
              << audit.max.z() << " mm\n";
  });

  // fk
  auto* fk_cmd = app.add_subcommand("fk", "Centerline of an actuator under pressure");
  std::string fk_spec, fk_model, fk_out;
  double fk_pressure = 0.0;
  int fk_samples = 16;
  bool fk_json = false;
  fk_cmd->add_option("--spec", fk_spec, "Actuator spec JSON")->required();
  fk_cmd->add_option("--pressure", fk_pressure, "kPa (default: the spec's pressure)");
  fk_cmd->add_option("--model", fk_model, "Surrogate model JSON");
  fk_cmd->add_option("--samples", fk_samples, "Points per module")->capture_default_str();
  fk_cmd->add_option("--out", fk_out, "Output (default stdout)");
  fk_cmd->add_flag("--json", fk_json, "Simulation JSON instead of centerline CSV");
  fk_cmd->callback([&] {
    ActuatorSpec a = actuator_from_json(parse_json(slurp(fk_spec)));
    if (fk_cmd->count("--pressure")) a.pressure_kpa = fk_pressure;
    std::optional<SurrogateModel> model;
    if (!fk_model.empty()) model = model_from_json(parse_json(slurp(fk_model)));
    const auto sim = pipeline::simulate(a, model ? &*model : nullptr, fk_samples);
    emit(fk_out, fk_json ? dump_json(pipeline::to_json(sim)) + '\n' : pipeline::centerline_csv(sim));
    if (sim.extrapolated) std::cerr << "warning: surrogate extrapolates outside its training range\n";
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  ServiceConfig config = ServiceConfig::from_env();
  serve_cmd->add_option("--store", config.store, "Project store directory (env BELLOW_STORE)")->capture_default_str();
  serve_cmd->add_option("--host", config.host, "Bind address (env BELLOW_HOST)")->capture_default_str();
  serve_cmd->add_option("--port", config.port, "Port, 0 for any (env BELLOW_PORT)")->capture_default_str();
  serve_cmd->add_option("--max-train", config.limits.train, "Concurrent train jobs")->capture_default_str();
  serve_cmd->add_option("--max-optimize", config.limits.optimize, "Concurrent optimize jobs")->capture_default_str();
  serve_cmd->callback([&] {
    Service service(config);
    const int port = service.bind();
    if (port < 0) throw IoError("cannot bind " + config.host + ":" + std::to_string(config.port));
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on http://" << config.host << ':' << port << " store " << config.store.string() << '\n';
    service.serve();
    g_service = nullptr;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}
