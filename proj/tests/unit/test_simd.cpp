#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <vector>

#include "bellow/json_io.hpp"
#include "bellow/rng.hpp"
#include "bellow/simd/kernels.hpp"
#include "bellow/surrogate.hpp"
#include "fixtures.hpp"

using namespace bellow;
using namespace bellow::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

std::vector<Isa> variants() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar fallback is always available") {
    CHECK(isa_supported(Isa::scalar));
    CHECK(kernels_for(Isa::scalar).isa == Isa::scalar);
    MESSAGE("active ISA: " << isa_name(active_kernels().isa));
  }

  TEST_CASE("variants match the scalar kernels") {
    const Kernels& ref = scalar_kernels();
    for (Isa isa : variants()) {
      const Kernels& k = kernels_for(isa);
      REQUIRE(k.isa == isa);
      // Odd lengths exercise the tail loops.
      for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1001u}) {
        CAPTURE(n);
        const auto x = random_vector(n, 1 + n), y = random_vector(n, 2 + n);
        const double tol = 1e-13 * (1.0 + static_cast<double>(n));
        CHECK(std::abs(k.dot(x.data(), y.data(), n) - ref.dot(x.data(), y.data(), n)) <= tol);
        CHECK(std::abs(k.sum(x.data(), n) - ref.sum(x.data(), n)) <= tol);
        CHECK(std::abs(k.squared_distance(x.data(), y.data(), n) - ref.squared_distance(x.data(), y.data(), n)) <= tol);

        auto a = y, b = y;
        k.axpy(0.37, x.data(), a.data(), n);
        ref.axpy(0.37, x.data(), b.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-15);

        std::vector<double> p(n), q(n);
        k.mul(x.data(), y.data(), p.data(), n);
        ref.mul(x.data(), y.data(), q.data(), n);
        CHECK(p == q);

        auto g1 = y, g2 = y;
        k.mul_one_minus_sq(x.data(), g1.data(), n);
        ref.mul_one_minus_sq(x.data(), g2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(g1[i] - g2[i]) <= 1e-15);
      }
    }
  }

  TEST_CASE("training under each ISA gives equivalent models") {
    const char* cli = std::getenv("BELLOW_CLI");
    const char* dataset = std::getenv("BELLOW_TEST_DATASET");
    if (!cli || !dataset || variants().empty()) return;
    const auto dir = testing::scratch_dir("simd");
    std::vector<SurrogateModel> models;
    for (const char* isa : {"scalar", "avx2", "neon"}) {
      if (std::string(isa) != "scalar" && !isa_supported(std::string(isa) == "avx2" ? Isa::avx2 : Isa::neon)) continue;
      const auto out = dir / (std::string(isa) + ".json");
      const std::string cmd = std::string("BELLOW_SIMD=") + isa + " '" + cli + "' train --quiet --epochs 5 --dataset '" +
                              dataset + "' --out '" + out.string() + "' > /dev/null";
      REQUIRE(std::system(cmd.c_str()) == 0);
      models.push_back(load_model(out.string()));
    }
    REQUIRE(models.size() >= 2);
    const auto p0 = models[0].parameters();
    for (std::size_t m = 1; m < models.size(); ++m) {
      const auto p = models[m].parameters();
      REQUIRE(p.size() == p0.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p[i] - p0[i]));
      CHECK(worst < 1e-6);
      CHECK(models[m].report.test_mse == doctest::Approx(models[0].report.test_mse).epsilon(1e-6));
    }
  }
}
