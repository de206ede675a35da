#include "bellow/json_io.hpp"

#include <cmath>
#include <sstream>

#include "bellow/error.hpp"

namespace bellow {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw FormatError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) throw FormatError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

bool bool_or(const Json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_boolean()) throw FormatError(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

const Json& array(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_array()) throw FormatError(std::string("field '") + key + "' must be an array");
  return v;
}

std::vector<double> doubles(const Json& a, const char* what) {
  if (!a.is_array()) throw FormatError(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) throw FormatError(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::uint64_t unsigned_or(const Json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw FormatError(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Json finite(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(); }

Json to_json(const ModuleDesign& d) {
  Json j;
  j["r_in"] = d.r_in;
  j["t"] = d.t;
  j["R"] = d.R;
  j["l"] = d.l;
  if (d.rigid) j["rigid"] = true;
  return j;
}

Json to_json(const Material& m) {
  Json j;
  j["youngs_modulus_kpa"] = m.youngs_modulus_kpa;
  j["poissons_ratio"] = m.poissons_ratio;
  j["density_g_cm3"] = m.density_g_cm3;
  return j;
}

Json to_json(const ActuatorSpec& a) {
  Json j;
  j["modules"] = Json::array();
  for (const auto& m : a.modules) j["modules"].push_back(to_json(m));
  j["rotations_rad"] = a.rotations_rad;
  j["pressure_kpa"] = a.pressure_kpa;
  j["material"] = to_json(a.material);
  return j;
}

Json to_json(const ArcSegment& s) {
  Json j;
  j["L"] = s.L;
  j["kappa"] = s.kappa;
  j["dphi"] = s.dphi;
  j["kind"] = s.kind == SegmentKind::arc ? "arc" : "line";
  return j;
}

Json to_json(std::span<const ArcSegment> segments) {
  Json j = Json::array();
  for (const auto& s : segments) j.push_back(to_json(s));
  return j;
}

Json to_json(const TrainReport& r, bool with_history) {
  Json j;
  j["train_mse"] = r.train_mse;
  j["test_mse"] = r.test_mse;
  j["epochs"] = r.epochs;
  j["split_seed"] = r.split_seed;
  j["train_rows"] = r.train_rows;
  j["test_rows"] = r.test_rows;
  j["final_loss"] = r.final_loss;
  if (with_history) j["loss_history"] = r.loss_history;
  return j;
}

Json to_json(const MatchProblem& p) {
  Json j;
  j["segments"] = to_json(std::span<const ArcSegment>(p.segments));
  j["p_max"] = p.p_max;
  if (p.kappa_max) j["kappa_max"] = *p.kappa_max;
  j["r_ou_min"] = p.r_ou_min;
  j["r_ou_max"] = p.r_ou_max;
  j["budget"] = {{"upper", p.budget.upper_iters}, {"lower", p.budget.lower_iters}};
  j["target_cost"] = p.target_cost;
  j["seed"] = p.seed;
  return j;
}

Json to_json(const MatchResult& r) {
  Json j;
  j["feasible"] = r.feasible;
  j["violations"] = r.violations;
  j["x"] = {{"r_in", r.x.r_in}, {"t", r.x.t}, {"P", r.x.P}};
  j["segments"] = Json::array();
  for (const auto& s : r.segments) {
    Json m;
    m["segment"] = to_json(s.segment);
    m["R"] = s.R;
    m["l"] = s.l;
    m["n"] = s.n;
    m["theta"] = s.theta;
    m["cost"] = finite(s.cost);
    m["length_error"] = s.length_error;
    m["rigid"] = s.rigid;
    j["segments"].push_back(std::move(m));
  }
  j["mean_cost"] = finite(r.mean_cost);
  j["kappa_max"] = r.kappa_max;
  j["upper_iterations"] = r.upper_iterations;
  j["lower_evaluations"] = r.lower_evaluations;
  j["seed"] = r.seed;
  j["budget"] = {{"upper", r.budget.upper_iters}, {"lower", r.budget.lower_iters}};
  j["extrapolated"] = r.extrapolated;
  j["best_cost_history"] = r.best_cost_history;
  return j;
}

Json to_json(std::span<const Vec3> points) {
  Json j = Json::array();
  for (const auto& p : points) j.push_back({p.x(), p.y(), p.z()});
  return j;
}

ModuleDesign module_from_json(const Json& j) {
  ModuleDesign d;
  d.r_in = number(j, "r_in");
  d.t = number(j, "t");
  d.R = number(j, "R");
  d.l = number(j, "l");
  d.rigid = bool_or(j, "rigid", false);
  return d;
}

Material material_from_json(const Json& j) {
  Material m;
  if (!j.is_object()) throw FormatError("material must be an object");
  m.youngs_modulus_kpa = number_or(j, "youngs_modulus_kpa", m.youngs_modulus_kpa);
  m.poissons_ratio = number_or(j, "poissons_ratio", m.poissons_ratio);
  m.density_g_cm3 = number_or(j, "density_g_cm3", m.density_g_cm3);
  return m;
}

ActuatorSpec actuator_from_json(const Json& j) {
  ActuatorSpec a;
  for (const auto& m : array(j, "modules")) a.modules.push_back(module_from_json(m));
  if (j.contains("rotations_rad")) {
    a.rotations_rad = doubles(j.at("rotations_rad"), "rotations_rad");
  } else if (!a.modules.empty()) {
    a.rotations_rad.assign(a.modules.size() - 1, 0.0);
  }
  a.pressure_kpa = number_or(j, "pressure_kpa", 0.0);
  if (j.contains("material")) a.material = material_from_json(j.at("material"));
  return a;
}

ArcSegment segment_from_json(const Json& j) {
  ArcSegment s;
  s.L = number(j, "L");
  s.kappa = number(j, "kappa");
  s.dphi = number_or(j, "dphi", 0.0);
  if (j.contains("kind")) {
    const Json& k = j.at("kind");
    if (k == "arc") {
      s.kind = SegmentKind::arc;
    } else if (k == "line") {
      s.kind = SegmentKind::line;
    } else {
      throw FormatError("segment kind must be \"arc\" or \"line\"");
    }
  } else {
    s.kind = classify_curvature(s.kappa);
  }
  return s;
}

std::vector<ArcSegment> segments_from_json(const Json& j) {
  const Json& a = j.is_object() && j.contains("segments") ? j.at("segments") : j;
  if (!a.is_array()) throw FormatError("segments must be an array");
  std::vector<ArcSegment> out;
  for (const auto& s : a) out.push_back(segment_from_json(s));
  return out;
}

MatchProblem problem_from_json(const Json& j) {
  MatchProblem p;
  p.segments = segments_from_json(field(j, "segments"));
  p.p_max = number_or(j, "p_max", p.p_max);
  if (j.contains("kappa_max") && !j.at("kappa_max").is_null()) p.kappa_max = number(j, "kappa_max");
  p.r_ou_min = number(j, "r_ou_min");
  p.r_ou_max = number(j, "r_ou_max");
  if (j.contains("budget")) {
    const Json& b = j.at("budget");
    p.budget.upper_iters = static_cast<int>(number_or(b, "upper", p.budget.upper_iters));
    p.budget.lower_iters = static_cast<int>(number_or(b, "lower", p.budget.lower_iters));
  }
  p.target_cost = number_or(j, "target_cost", p.target_cost);
  p.seed = unsigned_or(j, "seed", p.seed);
  return p;
}

MatchResult match_result_from_json(const Json& j) {
  MatchResult r;
  r.feasible = field(j, "feasible").get<bool>();
  for (const auto& v : array(j, "violations")) r.violations.push_back(v.get<std::string>());
  const Json& x = field(j, "x");
  r.x = {number(x, "r_in"), number(x, "t"), number(x, "P")};
  for (const auto& m : array(j, "segments")) {
    SegmentMatch s;
    s.segment = segment_from_json(field(m, "segment"));
    s.R = number(m, "R");
    s.l = number(m, "l");
    s.n = field(m, "n").get<int>();
    s.theta = number(m, "theta");
    s.cost = m.at("cost").is_null() ? NAN : number(m, "cost");
    s.length_error = number(m, "length_error");
    s.rigid = bool_or(m, "rigid", false);
    r.segments.push_back(s);
  }
  r.mean_cost = field(j, "mean_cost").is_null() ? NAN : number(j, "mean_cost");
  r.kappa_max = number(j, "kappa_max");
  r.upper_iterations = field(j, "upper_iterations").get<int>();
  r.lower_evaluations = field(j, "lower_evaluations").get<int>();
  r.seed = unsigned_or(j, "seed", 0);
  const Json& b = field(j, "budget");
  r.budget = {field(b, "upper").get<int>(), field(b, "lower").get<int>()};
  r.extrapolated = bool_or(j, "extrapolated", false);
  if (j.contains("best_cost_history")) r.best_cost_history = doubles(j.at("best_cost_history"), "best_cost_history");
  return r;
}

std::vector<Vec3> points_from_json(const Json& j) {
  const Json& a = j.is_object() && j.contains("points") ? j.at("points") : j;
  if (!a.is_array()) throw FormatError("points must be an array");
  std::vector<Vec3> out;
  for (const auto& p : a) {
    if (p.is_array()) {
      const auto v = doubles(p, "point");
      if (v.size() != 3) throw FormatError("points must have 3 coordinates");
      out.emplace_back(v[0], v[1], v[2]);
    } else {
      out.emplace_back(number(p, "x"), number(p, "y"), number(p, "z"));
    }
  }
  return out;
}

Json model_to_json(const SurrogateModel& m) {
  Json j;
  j["format"] = "bellow-surrogate";
  j["version"] = kSurrogateFormatVersion;
  j["activation"] = m.activation;
  j["inputs"] = {"r_in", "t", "R", "l", "P"};
  j["layer_sizes"] = m.layer_sizes();
  j["normalization"] = {{"input_min", m.norm.input_min},
                        {"input_max", m.norm.input_max},
                        {"output_min", m.norm.output_min},
                        {"output_max", m.norm.output_max}};
  j["layers"] = Json::array();
  for (const auto& l : m.layers) {
    j["layers"].push_back({{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
  }
  j["report"] = to_json(m.report);
  return j;
}

SurrogateModel model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("format") || j.at("format") != "bellow-surrogate") {
    throw FormatError("not a surrogate model file");
  }
  const Json& ver = field(j, "version");
  if (!ver.is_number_integer() || ver.get<int>() != kSurrogateFormatVersion) {
    throw VersionError("surrogate format version " + ver.dump() + " is not supported (expected " +
                       std::to_string(kSurrogateFormatVersion) + ")");
  }
  SurrogateModel m;
  m.activation = field(j, "activation").get<std::string>();
  if (m.activation != "tanh") throw FormatError("unsupported activation '" + m.activation + "'");
  const Json& n = field(j, "normalization");
  const auto lo = doubles(field(n, "input_min"), "input_min");
  const auto hi = doubles(field(n, "input_max"), "input_max");
  if (lo.size() != kSurrogateInputs || hi.size() != kSurrogateInputs) throw FormatError("normalization needs 5 inputs");
  for (std::size_t i = 0; i < kSurrogateInputs; ++i) {
    m.norm.input_min[i] = lo[i];
    m.norm.input_max[i] = hi[i];
    if (!(hi[i] > lo[i])) throw FormatError("degenerate normalization range");
  }
  m.norm.output_min = number(n, "output_min");
  m.norm.output_max = number(n, "output_max");
  std::size_t expect_in = kSurrogateInputs;
  for (const auto& lj : array(j, "layers")) {
    DenseLayer l;
    l.inputs = field(lj, "inputs").get<std::size_t>();
    l.outputs = field(lj, "outputs").get<std::size_t>();
    l.weights = doubles(field(lj, "weights"), "weights");
    l.bias = doubles(field(lj, "bias"), "bias");
    if (l.inputs != expect_in || l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs) {
      throw FormatError("layer shape mismatch");
    }
    expect_in = l.outputs;
    m.layers.push_back(std::move(l));
  }
  if (m.layers.empty() || expect_in != 1) throw FormatError("network must end in a single output");
  if (j.contains("report")) {
    const Json& r = j.at("report");
    m.report.train_mse = number_or(r, "train_mse", 0.0);
    m.report.test_mse = number_or(r, "test_mse", 0.0);
    m.report.epochs = static_cast<int>(number_or(r, "epochs", 0.0));
    m.report.split_seed = unsigned_or(r, "split_seed", 0);
    m.report.train_rows = static_cast<std::size_t>(number_or(r, "train_rows", 0.0));
    m.report.test_rows = static_cast<std::size_t>(number_or(r, "test_rows", 0.0));
    m.report.final_loss = number_or(r, "final_loss", 0.0);
  }
  return m;
}

std::string model_text(const SurrogateModel& m) { return model_to_json(m).dump(1) + '\n'; }

std::vector<Vec3> read_shape(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw FormatError("empty shape file");
  if (text[first] == '[' || text[first] == '{') return points_from_json(parse_json(text));

  std::vector<Vec3> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) {
      if (out.empty() && line_no == 1) continue;  // header row
      throw FormatError("shape line " + std::to_string(line_no) + ": expected x,y,z");
    }
    out.emplace_back(x, y, z);
  }
  if (out.empty()) throw FormatError("shape file has no points");
  return out;
}

}  // namespace bellow
