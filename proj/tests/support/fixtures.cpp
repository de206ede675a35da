#include "fixtures.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bellow/json_io.hpp"
#include "bellow/oracle.hpp"
#include "bellow/rng.hpp"

namespace bellow::testing {

namespace fs = std::filesystem;

std::vector<Vec3> chain_points(std::span<const ModuleState> chain, std::size_t count) {
  double total = 0.0;
  for (const auto& m : chain) total += m.l;
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double s = total * static_cast<double>(i) / static_cast<double>(count - 1);
    Pose base = Pose::Identity();
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const auto& m = chain[k];
      if (s <= m.l || k + 1 == chain.size()) {
        const double f = std::clamp(s / m.l, 0.0, 1.0);
        out.push_back(f > 0.0 ? Vec3((base * cc_transform({m.theta * f, m.l * f, m.dphi})).translation())
                              : Vec3(base.translation()));
        break;
      }
      s -= m.l;
      base = base * cc_transform(m);
    }
  }
  return out;
}

std::vector<ModuleState> s_chain() {
  const double L = kSRadius * kSAngle;
  return {{kSAngle, L, 0.0}, {kSAngle, L, std::numbers::pi}};
}

std::vector<Vec3> s_fixture() {
  const auto c = s_chain();
  return chain_points(c, 200);
}

std::vector<ModuleState> trunk_chain() {
  return {{0.9, 90.0, 0.0}, {0.8, 80.0, std::numbers::pi / 2}};
}

std::vector<Vec3> trunk_fixture() {
  const auto c = trunk_chain();
  return chain_points(c, 200);
}

std::vector<Vec3> line_fixture() {
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.emplace_back(0.5 * i, 0.2 * i, 2.0 * i);
  return pts;
}

std::vector<Vec3> with_noise(std::vector<Vec3> pts, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : pts) p += sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
  return pts;
}

void write_csv(const fs::path& p, std::span<const Vec3> pts) {
  std::ofstream os(p);
  write_centerline_csv(os, pts);
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os << bytes;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bellow-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path shared_model_path() {
  if (const char* env = std::getenv("BELLOW_TEST_MODEL")) {
    if (fs::exists(env)) return env;
  }
  const fs::path p = fs::temp_directory_path() / "bellow-test-fallback-model.json";
  if (!fs::exists(p)) {
    TrainOptions o;
    o.epochs = 100;
    auto [model, report] = train(generate_dataset(DatasetGrid{}, agilus30()), o);
    save_model(model, p.string());
  }
  return p;
}

const SurrogateModel& shared_model() {
  static const SurrogateModel model = load_model(shared_model_path().string());
  return model;
}

double discrete_frechet(std::span<const Vec3> a, std::span<const Vec3> b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (a[i] - b[j]).norm();
      if (i == 0 && j == 0) {
        cur[j] = d;
      } else if (i == 0) {
        cur[j] = std::max(cur[j - 1], d);
      } else if (j == 0) {
        cur[j] = std::max(prev[j], d);
      } else {
        cur[j] = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
      }
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

}  // namespace bellow::testing
