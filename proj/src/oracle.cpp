#include "bellow/oracle.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "bellow/error.hpp"

namespace bellow {

double oracle_load(const ModuleDesign& d, double pressure_kpa, const Material& m) {
  const double gap = d.R - d.r_in;
  return pressure_kpa * gap * gap * d.l / (m.shear_modulus_kpa() * d.t * d.t * d.t);
}

double oracle_theta(const ModuleDesign& d, double pressure_kpa, const Material& m) {
  auto report = validate_module(d);
  if (!report.ok()) throw ValidationError("invalid module design", report.violations);
  if (!(pressure_kpa >= 0.0) || !std::isfinite(pressure_kpa)) {
    throw ValidationError("invalid pressure", {"P >= 0"});
  }
  auto mat = validate_material(m);
  if (!mat.ok()) throw ValidationError("invalid material", mat.violations);
  const double cap = std::min(std::numbers::pi / 2.0, d.l / (2.0 * d.r_in));
  return cap * std::tanh(kOracleGain * oracle_load(d, pressure_kpa, m));
}

std::vector<double> axis_values(const GridAxis& axis) {
  std::vector<double> out;
  const double span = axis.max - axis.min;
  // Coupled axes can produce an interval that is rounding residue of a zero.
  const double negligible = 1e-12 * std::max({1.0, std::abs(axis.min), std::abs(axis.max)});
  if (!(axis.interval > negligible) || !(span > negligible)) {
    out.push_back(axis.min);
    return out;
  }
  const auto steps = static_cast<long>(std::floor(span / axis.interval + 1e-9));
  for (long k = 0; k <= steps; ++k) {
    out.push_back(std::min(axis.min + static_cast<double>(k) * axis.interval, axis.max));
  }
  return out;
}

std::vector<OracleSample> generate_dataset(const DatasetGrid& grid, const Material& m) {
  std::vector<OracleSample> rows;
  const auto pressures = axis_values(grid.pressure);
  for (double r_in : axis_values(grid.r_in)) {
    for (double t : axis_values(DatasetGrid::t_axis(r_in))) {
      for (double R : axis_values(DatasetGrid::R_axis(r_in, t))) {
        for (double l : axis_values(DatasetGrid::l_axis(r_in, t, R))) {
          const ModuleDesign d{r_in, t, R, l};
          if (!validate_module(d).ok()) continue;
          for (double P : pressures) rows.push_back({r_in, t, R, l, P, oracle_theta(d, P, m)});
        }
      }
    }
  }
  return rows;
}

void write_dataset_csv(std::ostream& os, const std::vector<OracleSample>& rows) {
  os << "r_in,t,R,l,P,theta\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.r_in << ',' << r.t << ',' << r.R << ',' << r.l << ',' << r.P << ',' << r.theta << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

}  // namespace

std::vector<OracleSample> read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty dataset");
  const auto header = split_csv(line);
  static constexpr std::array<const char*, 6> kColumns = {"r_in", "t", "R", "l", "P", "theta"};
  std::array<std::size_t, 6> index{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) throw FormatError(std::string("dataset missing column '") + kColumns[c] + "'");
    index[c] = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<OracleSample> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " columns, got " + std::to_string(cells.size()));
    }
    std::array<double, 6> v{};
    for (std::size_t c = 0; c < 6; ++c) v[c] = parse_number(cells[index[c]], line_no);
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return rows;
}

}  // namespace bellow
