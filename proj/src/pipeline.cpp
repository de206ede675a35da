#include "bellow/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "bellow/error.hpp"
#include "bellow/stl.hpp"

namespace bellow::pipeline {

ActuatorSpec default_actuator(int count) {
  if (count < 1) throw ValidationError("invalid module count", {"module count >= 1"});
  return build_actuator(std::vector<ModuleDesign>(static_cast<std::size_t>(count)),
                        std::vector<double>(static_cast<std::size_t>(count - 1), 0.0), 0.0, agilus30());
}

std::string dataset_text(const std::vector<OracleSample>& rows) {
  std::ostringstream os;
  write_dataset_csv(os, rows);
  return os.str();
}

std::vector<OracleSample> dataset_from_text(const std::string& text) {
  std::istringstream is(text);
  return read_dataset_csv(is);
}

ShapeSegmentation segment_shape(const std::vector<Vec3>& points, double tolerance) {
  ShapeSegmentation s;
  s.result = segment(points, tolerance);
  s.points = points.size();
  s.tolerance = tolerance;
  // Dense reconstruction; deviation is measured to its polyline.
  const auto curve = reconstruct(s.result, 256);
  for (const auto& p : points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
      const Vec3 d = curve[i + 1] - curve[i];
      const double len2 = d.squaredNorm();
      const double u = len2 > 0.0 ? std::clamp((p - curve[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
      best = std::min(best, (curve[i] + u * d - p).norm());
    }
    s.max_deviation = std::max(s.max_deviation, best);
  }
  return s;
}

Json to_json(const ShapeSegmentation& s) {
  Json j;
  j["segments"] = bellow::to_json(std::span<const ArcSegment>(s.result.segments));
  j["tolerance"] = s.tolerance;
  j["points"] = s.points;
  j["fit_residual"] = s.result.fit_residual;
  j["max_deviation"] = s.max_deviation;
  const Pose& b = s.result.base;
  j["base"] = {{"origin", {b.translation().x(), b.translation().y(), b.translation().z()}},
               {"rotation", Json::array()}};
  for (int r = 0; r < 3; ++r) {
    j["base"]["rotation"].push_back({b.linear()(r, 0), b.linear()(r, 1), b.linear()(r, 2)});
  }
  return j;
}

Simulation simulate(const ActuatorSpec& a, const SurrogateModel* model, int samples_per_module) {
  const auto report = validate_actuator(a);
  if (!report.ok()) throw ValidationError("invalid actuator", report.violations);
  if (samples_per_module < 2) throw ValidationError("invalid sampling", {"samples_per_module >= 2"});
  Simulation s;
  s.thetas.assign(a.modules.size(), 0.0);
  bool any_flexible = false;
  for (const auto& m : a.modules) any_flexible |= !m.rigid;
  if (a.pressure_kpa != 0.0 && any_flexible) {
    if (!model) throw NotFoundError("a surrogate model is required at nonzero pressure");
    s.thetas = predict_thetas(*model, a);
    for (const auto& m : a.modules) {
      if (!m.rigid) s.extrapolated |= model->predict(m, a.pressure_kpa).extrapolation_warning;
    }
  }
  s.tips = forward_kinematics(a, s.thetas);
  s.centerline = sample_centerline(a, s.thetas, samples_per_module);
  return s;
}

Json to_json(const Simulation& s) {
  Json j;
  j["thetas"] = s.thetas;
  j["tips"] = Json::array();
  for (const auto& t : s.tips) {
    const Vec3 p = t.translation();
    const Vec3 z = t.linear().col(2);
    j["tips"].push_back({{"position", {p.x(), p.y(), p.z()}}, {"axis", {z.x(), z.y(), z.z()}}});
  }
  j["centerline"] = bellow::to_json(std::span<const Vec3>(s.centerline));
  j["extrapolated"] = s.extrapolated;
  return j;
}

std::string centerline_csv(const Simulation& s) {
  std::ostringstream os;
  write_centerline_csv(os, s.centerline);
  return os.str();
}

std::string match_text(const MatchResult& r) { return dump_json(bellow::to_json(r)) + '\n'; }

TriangleMesh checked_mesh(const ActuatorSpec& a, const MeshOptions& options, MeshAudit* audit_out) {
  TriangleMesh mesh = mesh_actuator(a, options);
  const MeshAudit audit = audit_mesh(mesh);
  if (!audit.ok()) {
    throw DegenerateError("mesh failed the audit: " + std::to_string(audit.boundary_edges) + " boundary, " +
                          std::to_string(audit.nonmanifold_edges) + " non-manifold, " +
                          std::to_string(audit.misoriented_edges) + " misoriented edges");
  }
  if (audit_out) *audit_out = audit;
  return mesh;
}

std::string stl_bytes(const ActuatorSpec& a, const MeshOptions& options) {
  std::ostringstream os(std::ios::binary);
  write_stl(os, checked_mesh(a, options));
  return os.str();
}

}  // namespace bellow::pipeline
