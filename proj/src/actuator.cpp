#include "bellow/actuator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bellow/error.hpp"

namespace bellow {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ValidationReport validate_module(const ModuleDesign& d) {
  ValidationReport report;
  auto& v = report.violations;
  const double values[] = {d.r_in, d.t, d.R, d.l};
  const char* names[] = {"r_in > 0", "t > 0", "R > 0", "l > 0"};
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0) v.emplace_back(names[i]);
  }
  if (!v.empty()) return report;

  // Strict inequality: the boundary l == 4t is rejected.
  if (!(d.l > 4.0 * d.t + kGeometryTolerance)) {
    v.push_back("l > 4t (" + fmt(d.l) + " <= " + fmt(4.0 * d.t) + ")");
  }
  if (d.R - d.r_in < d.l / 4.0 - kGeometryTolerance) {
    v.push_back("R - r_in >= l/4 (" + fmt(d.R - d.r_in) + " < " + fmt(d.l / 4.0) + ")");
  }
  return report;
}

ValidationReport validate_material(const Material& m) {
  ValidationReport report;
  if (!std::isfinite(m.youngs_modulus_kpa) || m.youngs_modulus_kpa <= 0.0)
    report.violations.emplace_back("youngs_modulus > 0");
  if (!std::isfinite(m.poissons_ratio) || m.poissons_ratio <= 0.0 || m.poissons_ratio > 0.5)
    report.violations.emplace_back("0 < poissons_ratio <= 0.5");
  if (!std::isfinite(m.density_g_cm3) || m.density_g_cm3 <= 0.0)
    report.violations.emplace_back("density > 0");
  return report;
}

DerivedGeometry derived_geometry(const ModuleDesign& d) {
  auto report = validate_module(d);
  if (!report.ok()) throw ValidationError("invalid module design", report.violations);
  DerivedGeometry g{};
  g.r_ou = 2.0 * d.R - d.r_in;
  g.r_1 = d.l / 4.0;
  g.r_2 = d.l / 4.0;
  // Clamp the rounding noise that the 1e-9 boundary tolerance admits.
  g.f = std::max(0.0, g.r_ou - d.r_in - g.r_1 - g.r_2);
  return g;
}

ValidationReport validate_actuator(const ActuatorSpec& a) {
  ValidationReport report;
  auto& v = report.violations;
  if (a.modules.empty()) v.emplace_back("at least one module");
  if (!a.modules.empty() && a.rotations_rad.size() != a.modules.size() - 1) {
    v.push_back("rotations count == modules count - 1 (got " + std::to_string(a.rotations_rad.size()) +
                " for " + std::to_string(a.modules.size()) + " modules)");
  }
  for (std::size_t i = 0; i < a.modules.size(); ++i) {
    for (auto& msg : validate_module(a.modules[i]).violations) {
      v.push_back("module " + std::to_string(i) + ": " + msg);
    }
  }
  for (std::size_t i = 1; i < a.modules.size(); ++i) {
    const auto& m0 = a.modules.front();
    const auto& mi = a.modules[i];
    if (std::abs(mi.r_in - m0.r_in) > kGeometryTolerance || std::abs(mi.t - m0.t) > kGeometryTolerance) {
      v.push_back("module " + std::to_string(i) + ": shared r_in and t across modules");
    }
  }
  for (double r : a.rotations_rad) {
    if (!std::isfinite(r)) {
      v.emplace_back("finite rotations");
      break;
    }
  }
  if (!std::isfinite(a.pressure_kpa) || a.pressure_kpa < 0.0) v.emplace_back("pressure >= 0");
  for (auto& msg : validate_material(a.material).violations) v.push_back("material: " + msg);
  return report;
}

ActuatorSpec build_actuator(std::vector<ModuleDesign> modules, std::vector<double> rotations_rad,
                            double pressure_kpa, const Material& material) {
  ActuatorSpec a{std::move(modules), std::move(rotations_rad), pressure_kpa, material};
  auto report = validate_actuator(a);
  if (!report.ok()) throw ValidationError("invalid actuator", report.violations);
  return a;
}

}  // namespace bellow
