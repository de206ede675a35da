#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bellow/kinematics.hpp"
#include "bellow/surrogate.hpp"

namespace bellow::testing {

// `count` points evenly spaced in arc length along a module chain.
std::vector<Vec3> chain_points(std::span<const ModuleState> chain, std::size_t count);

// Letter S: two arcs of equal radius and length bending in opposite
// directions, 200 points.
inline constexpr double kSRadius = 120.0;
inline constexpr double kSAngle = 1.1;  // rad per arc
std::vector<ModuleState> s_chain();
std::vector<Vec3> s_fixture();

// Two arcs whose bending planes are perpendicular.
std::vector<ModuleState> trunk_chain();
std::vector<Vec3> trunk_fixture();

std::vector<Vec3> line_fixture();

// Adds deterministic Gaussian noise of standard deviation sigma (mm).
std::vector<Vec3> with_noise(std::vector<Vec3> pts, double sigma, std::uint64_t seed);

void write_csv(const std::filesystem::path& p, std::span<const Vec3> pts);
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& bytes);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// Model trained by the ctest fixture (BELLOW_TEST_MODEL), or a quick
// in-process one when running outside ctest.
const SurrogateModel& shared_model();
std::filesystem::path shared_model_path();

// Discrete Frechet distance between two polylines.
double discrete_frechet(std::span<const Vec3> a, std::span<const Vec3> b);

}  // namespace bellow::testing
