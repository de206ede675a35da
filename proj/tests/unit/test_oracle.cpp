#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "bellow/error.hpp"
#include "bellow/oracle.hpp"

using namespace bellow;

TEST_SUITE("oracle") {
  TEST_CASE("axis values") {
    const auto v = axis_values({0.0, 10.0, 0.5});
    CHECK(v.size() == 21);
    CHECK(v.back() == doctest::Approx(10.0));
    CHECK(axis_values({3.0, 3.0, 1.0}).size() == 1);
    CHECK(axis_values({3.0, 5.0, 0.0}).size() == 1);
    // Rounding residue of a zero interval must not produce a dense sweep.
    CHECK(axis_values({6.0, 6.0 + 1e-15, 4e-16}).size() == 1);
    CHECK(axis_values({0.0, 1.0, 0.1}).size() == 11);
  }

  TEST_CASE("theta grows with pressure and vanishes at zero") {
    const ModuleDesign d;
    const Material m = agilus30();
    CHECK(oracle_theta(d, 0.0, m) == 0.0);
    double prev = 0.0;
    for (double p = 0.5; p <= 10.0; p += 0.5) {
      const double th = oracle_theta(d, p, m);
      CHECK(th > prev);
      prev = th;
    }
    CHECK(prev < std::min(M_PI / 2, d.l / (2 * d.r_in)));
  }

  TEST_CASE("stiffer material bends less") {
    Material stiff = agilus30();
    stiff.youngs_modulus_kpa *= 4;
    CHECK(oracle_theta(ModuleDesign{}, 5.0, stiff) < oracle_theta(ModuleDesign{}, 5.0, agilus30()));
  }

  TEST_CASE("invalid designs are rejected") {
    CHECK_THROWS_AS(oracle_theta(ModuleDesign{5, 3, 8, 10}, 5.0, agilus30()), ValidationError);
    CHECK_THROWS_AS(oracle_theta(ModuleDesign{}, -1.0, agilus30()), ValidationError);
  }

  TEST_CASE("grid covers the axes and every row is a valid module") {
    const auto rows = generate_dataset(DatasetGrid{}, agilus30());
    std::set<double> r_in, p;
    for (const auto& s : rows) {
      r_in.insert(s.r_in);
      p.insert(s.P);
      CHECK(validate_module(s.design()).ok());
      CHECK(s.l > 4 * s.t);
      CHECK(s.R - s.r_in >= s.l / 4 - 1e-9);
      CHECK(s.theta == oracle_theta(s.design(), s.P, agilus30()));
    }
    CHECK(r_in == std::set<double>{2, 4, 6, 8, 10});
    CHECK(p.size() == 21);
  }

  TEST_CASE("CSV round trip is exact") {
    const auto rows = generate_dataset(DatasetGrid{{2, 4, 2}, {0, 1, 0.5}}, agilus30());
    std::stringstream ss;
    write_dataset_csv(ss, rows);
    CHECK(ss.str().rfind("r_in,t,R,l,P,theta\n", 0) == 0);
    CHECK(read_dataset_csv(ss) == rows);
  }

  TEST_CASE("CSV schema errors") {
    std::stringstream missing("r_in,t,R,l,P\n1,2,3,4,5\n");
    CHECK_THROWS_AS(read_dataset_csv(missing), FormatError);
    std::stringstream bad("r_in,t,R,l,P,theta\n1,2,x,4,5,6\n");
    CHECK_THROWS_AS(read_dataset_csv(bad), FormatError);
  }
}
