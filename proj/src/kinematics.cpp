#include "bellow/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "bellow/error.hpp"

namespace bellow {

Pose cc_transform(const ModuleState& s) {
  if (!std::isfinite(s.theta) || !std::isfinite(s.l) || !std::isfinite(s.dphi)) {
    throw ValidationError("non-finite module state", {"finite theta, l, dphi"});
  }
  if (s.l <= 0.0 || s.theta < 0.0) {
    throw ValidationError("invalid module state", {"l > 0 and theta >= 0"});
  }
  const double cp = std::cos(s.dphi), sp = std::sin(s.dphi);
  double ct, st, radial, axial;
  if (s.theta >= kSmallBendAngle) {
    ct = std::cos(s.theta);
    st = std::sin(s.theta);
    const double r = s.l / s.theta;
    radial = r * (1.0 - ct);
    axial = r * st;
  } else {
    // Taylor series; the dropped terms are O(theta^3) below the threshold.
    const double t2 = s.theta * s.theta;
    ct = 1.0 - t2 / 2.0;
    st = s.theta;
    radial = s.l * s.theta / 2.0;
    axial = s.l * (1.0 - t2 / 6.0);
  }
  Pose T = Pose::Identity();
  auto& m = T.matrix();
  m(0, 0) = cp * ct; m(0, 1) = -sp; m(0, 2) = cp * st; m(0, 3) = cp * radial;
  m(1, 0) = sp * ct; m(1, 1) = cp;  m(1, 2) = sp * st; m(1, 3) = sp * radial;
  m(2, 0) = -st;     m(2, 1) = 0.0; m(2, 2) = ct;      m(2, 3) = axial;
  return T;
}

std::vector<Pose> forward_kinematics(const ActuatorSpec& a, std::span<const double> thetas) {
  if (thetas.size() != a.modules.size()) {
    throw ValidationError("theta count mismatch", {"thetas count == modules count"});
  }
  if (!a.modules.empty() && a.rotations_rad.size() + 1 != a.modules.size()) {
    throw ValidationError("rotation count mismatch", {"rotations count == modules count - 1"});
  }
  std::vector<Pose> tips;
  tips.reserve(a.modules.size());
  Pose T = Pose::Identity();
  for (std::size_t i = 0; i < a.modules.size(); ++i) {
    const double theta = a.modules[i].rigid ? 0.0 : thetas[i];
    T = T * cc_transform({theta, a.modules[i].l, a.twist_before(i)});
    tips.push_back(T);
  }
  return tips;
}

std::vector<Vec3> sample_chain(std::span<const ModuleState> chain, int samples_per_module,
                               const Pose& base) {
  if (samples_per_module < 2) {
    throw ValidationError("too few samples", {"samples_per_module >= 2"});
  }
  std::vector<Vec3> pts;
  pts.reserve(chain.size() * static_cast<std::size_t>(samples_per_module - 1) + 1);
  pts.push_back(base.translation());
  Pose T = base;
  for (const auto& s : chain) {
    // Partial arcs share curvature theta/l; the twist applies from the start.
    for (int k = 1; k < samples_per_module; ++k) {
      const double frac = static_cast<double>(k) / (samples_per_module - 1);
      const Pose partial = cc_transform({s.theta * frac, s.l * frac, s.dphi});
      pts.push_back(T * partial.translation());
    }
    T = T * cc_transform(s);
  }
  return pts;
}

std::vector<Vec3> sample_centerline(const ActuatorSpec& a, std::span<const double> thetas,
                                    int samples_per_module) {
  if (thetas.size() != a.modules.size()) {
    throw ValidationError("theta count mismatch", {"thetas count == modules count"});
  }
  std::vector<ModuleState> chain;
  chain.reserve(a.modules.size());
  for (std::size_t i = 0; i < a.modules.size(); ++i) {
    chain.push_back({a.modules[i].rigid ? 0.0 : thetas[i], a.modules[i].l, a.twist_before(i)});
  }
  return sample_chain(chain, samples_per_module);
}

double angle_from_endpoints(const Vec3& e1, const Vec3& e2) {
  const double dz = e1.z() - e2.z();
  const double dx = e1.x() - e2.x();
  const double norm = std::sqrt(dz * dz + dx * dx);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateError("marker points coincide in the x-z plane");
  }
  return std::acos(std::clamp(dz / norm, -1.0, 1.0));
}

double polyline_length(std::span<const Vec3> pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

void write_centerline_csv(std::ostream& os, std::span<const Vec3> pts) {
  os << "x,y,z\n" << std::setprecision(17);
  for (const auto& p : pts) os << p.x() << ',' << p.y() << ',' << p.z() << '\n';
}

}  // namespace bellow
