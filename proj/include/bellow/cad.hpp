#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "bellow/actuator.hpp"

namespace bellow {

// Profile coordinates: x = radius from the module axis, y = axial height.
using Point2 = Eigen::Vector2d;

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;              // mm
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counter-clockwise seen from outside

  Eigen::Vector3d normal(std::size_t tri) const;
  double area(std::size_t tri) const;
};

struct MeshOptions {
  double angle_step_deg = 2.0;  // revolution step
  double arc_step_deg = 2.0;    // max chord angle on profile arcs
  // Axial spacing of the fan's inner face, in mm.
  double fan_spacing = 0.5;
};

// Closed wall cross-section of one module, counter-clockwise, without a
// repeated end point: outer surface from (r_in, 0) to (r_in, l), the top
// interface, the inner surface back down, the bottom interface.
std::vector<Point2> module_profile(const ModuleDesign& d, const MeshOptions& options = {});

// Cavity region the fan constraint fills (radius >= r_in), counter-clockwise.
std::vector<Point2> fan_profile(const ModuleDesign& d, const MeshOptions& options = {});

// Pneumatic inlet radius in the base cap.
double port_radius(const ModuleDesign& d);

// Single module: profile revolved about z with the pi/2 fan centred on +x.
// The bore stays open, so the solid has genus 1.
TriangleMesh mesh_module(const ModuleDesign& d, const MeshOptions& options = {});

// Straight (unpressurized) actuator, module i's fan centred on the
// cumulative twist, flush caps at both ends and an inlet port in the base.
TriangleMesh mesh_actuator(const ActuatorSpec& a, const MeshOptions& options = {});

struct MeshAudit {
  std::size_t vertices = 0, edges = 0, faces = 0;
  std::size_t boundary_edges = 0;      // used by one triangle
  std::size_t nonmanifold_edges = 0;   // used by three or more
  std::size_t misoriented_edges = 0;   // two triangles traverse it the same way
  std::size_t degenerate_triangles = 0;  // area <= 1e-9 mm^2
  long euler_characteristic = 0;
  double volume = 0.0;  // divergence theorem, positive for outward winding
  double surface_area = 0.0;
  Eigen::Vector3d min = Eigen::Vector3d::Zero(), max = Eigen::Vector3d::Zero();

  bool watertight() const { return boundary_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0; }
  bool ok() const { return watertight() && degenerate_triangles == 0 && volume > 0.0; }
};

MeshAudit audit_mesh(const TriangleMesh& mesh);

// Integral of r over a closed (r, z) polygon's area, via Green's theorem.
double radial_moment(const std::vector<Point2>& loop);

}  // namespace bellow
