#pragma once

#include <string>
#include <vector>

namespace bellow {

// Absolute tolerance (mm) for the module inequalities.
inline constexpr double kGeometryTolerance = 1e-9;

// Geometric parameters of one bellow module, all in mm.
struct ModuleDesign {
  double r_in = 5.0;  // inner radius
  double t = 1.5;     // wall thickness
  double R = 8.0;     // average radius
  double l = 10.0;    // module length
  // Fully constrained module used on straight segments; it never bends.
  bool rigid = false;

  friend bool operator==(const ModuleDesign&, const ModuleDesign&) = default;
};

struct DerivedGeometry {
  double r_ou;  // outer radius, 2R - r_in
  double r_1;   // crown fillet radius, l/4
  double r_2;   // root fillet radius, l/4
  double f;     // flank length, r_ou - r_in - r_1 - r_2
};

struct Material {
  double youngs_modulus_kpa = 546.0;
  double poissons_ratio = 0.49;
  double density_g_cm3 = 1.16;

  double shear_modulus_kpa() const { return youngs_modulus_kpa / (2.0 * (1.0 + poissons_ratio)); }

  friend bool operator==(const Material&, const Material&) = default;
};

// Agilus30 photopolymer.
inline Material agilus30() { return Material{}; }

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks positivity and the two module inequalities (l > 4t, R - r_in >= l/4).
// Violations are reported by name, never thrown.
ValidationReport validate_module(const ModuleDesign& d);
ValidationReport validate_material(const Material& m);

// Throws ValidationError for invalid designs.
DerivedGeometry derived_geometry(const ModuleDesign& d);

// Ordered stack of modules. rotations[i] is the clockwise twist (rad, looking
// from the upper module toward the lower one) between module i and i + 1, so
// rotations.size() == modules.size() - 1. The first module is not rotated
// relative to the base frame.
struct ActuatorSpec {
  std::vector<ModuleDesign> modules;
  std::vector<double> rotations_rad;
  double pressure_kpa = 0.0;
  Material material;

  // Twist applied at module i (0 for the first module).
  double twist_before(std::size_t i) const { return i == 0 ? 0.0 : rotations_rad[i - 1]; }

  friend bool operator==(const ActuatorSpec&, const ActuatorSpec&) = default;
};

ValidationReport validate_actuator(const ActuatorSpec& a);

// Validates and assembles an actuator. Throws ValidationError on length
// mismatch, mixed r_in/t, or any invalid module.
ActuatorSpec build_actuator(std::vector<ModuleDesign> modules, std::vector<double> rotations_rad,
                            double pressure_kpa, const Material& material);

}  // namespace bellow
