#pragma once

// Engine entry points shared by the CLI and the HTTP service. Both front
// ends call these and serialize through the same functions, so identical
// inputs give identical bytes.

#include <optional>
#include <string>
#include <vector>

#include "bellow/cad.hpp"
#include "bellow/json_io.hpp"
#include "bellow/oracle.hpp"
#include "bellow/segmentation.hpp"
#include "bellow/shape_match.hpp"
#include "bellow/surrogate.hpp"

namespace bellow::pipeline {

// `count` default modules, no twist, unpressurized.
ActuatorSpec default_actuator(int count = 8);

std::string dataset_text(const std::vector<OracleSample>& rows);
std::vector<OracleSample> dataset_from_text(const std::string& text);

struct ShapeSegmentation {
  SegmentationResult result;
  std::size_t points = 0;
  double tolerance = 0.0;
  // Largest distance from an input point to the reconstructed curve.
  double max_deviation = 0.0;
};

ShapeSegmentation segment_shape(const std::vector<Vec3>& points, double tolerance);
Json to_json(const ShapeSegmentation& s);

struct Simulation {
  std::vector<double> thetas;
  std::vector<Pose> tips;
  std::vector<Vec3> centerline;
  bool extrapolated = false;
};

// Surrogate forward kinematics at `a.pressure_kpa`. A null model is allowed
// only when the actuator is unpressurized or fully rigid.
Simulation simulate(const ActuatorSpec& a, const SurrogateModel* model, int samples_per_module = 16);
Json to_json(const Simulation& s);
std::string centerline_csv(const Simulation& s);

// Exact text of a MatchResult document.
std::string match_text(const MatchResult& r);

// Actuator mesh that passed the audit; throws DegenerateError otherwise.
TriangleMesh checked_mesh(const ActuatorSpec& a, const MeshOptions& options = {}, MeshAudit* audit = nullptr);
// Binary STL of checked_mesh.
std::string stl_bytes(const ActuatorSpec& a, const MeshOptions& options = {});

}  // namespace bellow::pipeline
