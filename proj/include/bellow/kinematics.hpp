#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "bellow/actuator.hpp"

namespace bellow {

using Vec3 = Eigen::Vector3d;
using Pose = Eigen::Isometry3d;

// Below this bending angle the constant-curvature transform switches to a
// series expansion, avoiding l / theta.
inline constexpr double kSmallBendAngle = 1e-7;

struct ModuleState {
  double theta = 0.0;  // bending angle, rad
  double l = 0.0;      // arc length, mm
  double dphi = 0.0;   // twist relative to the previous module, rad
};

// Base-to-tip transform of one constant-curvature module:
//   R = Rz(dphi) * Ry(theta),  p = Rz(dphi) * (l/theta) * (1 - cos theta, 0, sin theta).
Pose cc_transform(const ModuleState& s);

// Tip pose of every module in the actuator base frame.
std::vector<Pose> forward_kinematics(const ActuatorSpec& a, std::span<const double> thetas);

// Points along the deformed centerline. Each module contributes
// `samples_per_module` points from its base to its tip; shared endpoints
// between modules appear once.
std::vector<Vec3> sample_centerline(const ActuatorSpec& a, std::span<const double> thetas,
                                    int samples_per_module);

// Same sampling for a bare chain of module states, starting at `base`.
std::vector<Vec3> sample_chain(std::span<const ModuleState> chain, int samples_per_module,
                               const Pose& base = Pose::Identity());

// Bending angle from two marker points on the free end plane; only the x-z
// components enter.
double angle_from_endpoints(const Vec3& e1, const Vec3& e2);

double polyline_length(std::span<const Vec3> pts);

// CSV with header `x,y,z`, mm, full precision.
void write_centerline_csv(std::ostream& os, std::span<const Vec3> pts);

}  // namespace bellow
