#pragma once

#include <iosfwd>
#include <vector>

#include "bellow/actuator.hpp"

namespace bellow {

// Analytic stand-in for the finite-element deflection study. Any dataset with
// the same CSV schema (for instance exported FEM results) can replace it.
//
//   mu     = E / (2 (1 + nu))
//   load   = P (R - r_in)^2 l / (mu t^3)
//   cap    = min(pi/2, l / (2 r_in))
//   theta  = cap * tanh(0.05 * load)
inline constexpr double kOracleGain = 0.05;

double oracle_load(const ModuleDesign& d, double pressure_kpa, const Material& m);
double oracle_theta(const ModuleDesign& d, double pressure_kpa, const Material& m);

struct OracleSample {
  double r_in, t, R, l, P, theta;

  ModuleDesign design() const { return {r_in, t, R, l}; }
  friend bool operator==(const OracleSample&, const OracleSample&) = default;
};

struct GridAxis {
  double min, max, interval;
};

// Coupled sampling grid. r_in and P are fixed axes; the remaining ranges
// are re-derived for each outer value:
//   t in [r_in/4, r_in/3] step r_in/24
//   R in [r_in + t, 2 r_in] step (r_in - t)/4
//   l in [4t, 4 (R - r_in)] step R - r_in - t
struct DatasetGrid {
  GridAxis r_in{2.0, 10.0, 2.0};
  GridAxis pressure{0.0, 10.0, 0.5};

  static GridAxis t_axis(double r_in) { return {r_in / 4.0, r_in / 3.0, r_in / 24.0}; }
  static GridAxis R_axis(double r_in, double t) { return {r_in + t, 2.0 * r_in, (r_in - t) / 4.0}; }
  static GridAxis l_axis(double r_in, double t, double R) { return {4.0 * t, 4.0 * (R - r_in), R - r_in - t}; }
};

// Values min, min + k*interval, ... <= max, allowing 1e-9 of a step for
// rounding. A negligible interval or range yields the single value `min`.
std::vector<double> axis_values(const GridAxis& axis);

// Full Cartesian sweep in lexicographic (r_in, t, R, l, P) order. Designs that
// violate the module inequalities (the l = 4t row, in practice) are skipped.
std::vector<OracleSample> generate_dataset(const DatasetGrid& grid, const Material& m);

// `r_in,t,R,l,P,theta`, LF endings, 17 significant digits.
void write_dataset_csv(std::ostream& os, const std::vector<OracleSample>& rows);
// Throws FormatError on a missing column or malformed row.
std::vector<OracleSample> read_dataset_csv(std::istream& is);

}  // namespace bellow
