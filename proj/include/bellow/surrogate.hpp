#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bellow/actuator.hpp"
#include "bellow/oracle.hpp"

namespace bellow {

inline constexpr int kSurrogateFormatVersion = 1;
inline constexpr std::size_t kSurrogateInputs = 5;  // r_in, t, R, l, P
// Inputs further than this fraction of their training range outside the box
// raise the extrapolation warning.
inline constexpr double kExtrapolationWarning = 0.10;

using SurrogateInput = std::array<double, kSurrogateInputs>;

// Affine maps between raw units and the network's [-1, 1] coordinates.
struct Normalization {
  SurrogateInput input_min{}, input_max{};
  double output_min = 0.0, output_max = 1.0;

  double to_unit(std::size_t i, double v) const;
  double output_from_unit(double u) const;
  double output_to_unit(double v) const;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

// Fully connected layer, weights row-major (outputs x inputs).
struct DenseLayer {
  std::size_t inputs = 0, outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct TrainReport {
  double train_mse = 0.0;  // rad^2
  double test_mse = 0.0;   // rad^2
  int epochs = 0;
  std::uint64_t split_seed = 0;
  std::size_t train_rows = 0, test_rows = 0;
  double final_loss = 0.0;  // regularized objective per training row, unit scale
  std::vector<double> loss_history;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct Prediction {
  double theta = 0.0;
  // Largest distance outside the training box, as a fraction of the range.
  double extrapolation = 0.0;
  bool extrapolation_warning = false;
};

struct SurrogateModel {
  std::string activation = "tanh";
  Normalization norm;
  std::vector<DenseLayer> layers;  // hidden layers use tanh, the last is linear
  TrainReport report;

  std::vector<std::size_t> layer_sizes() const;
  std::size_t parameter_count() const;
  // Per layer: weights then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);

  Prediction predict(const SurrogateInput& x) const;
  Prediction predict(const ModuleDesign& d, double pressure_kpa) const;
  double theta(const ModuleDesign& d, double pressure_kpa) const { return predict(d, pressure_kpa).theta; }

  friend bool operator==(const SurrogateModel&, const SurrogateModel&) = default;
};

// Xavier-uniform weights, zero biases.
SurrogateModel make_network(const std::vector<std::size_t>& sizes, std::uint64_t seed);

// Normalized inputs stored feature-major (feature k of all rows contiguous).
struct TrainingBatch {
  std::size_t rows = 0;
  std::vector<double> x;  // kSurrogateInputs * rows
  std::vector<double> y;  // rows, unit scale
};

TrainingBatch make_batch(const Normalization& norm, std::span<const OracleSample> samples,
                         std::span<const std::size_t> indices);

// Sum of squared unit-scale residuals plus lambda * (sum of squared weights;
// biases are not penalized). Fills `gradient` when non-null.
double objective(const SurrogateModel& model, const TrainingBatch& batch, double lambda,
                 std::vector<double>* gradient = nullptr);

struct TrainOptions {
  double split_ratio = 0.8;
  int epochs = 1000;
  std::uint64_t seed = 42;
  double lambda = 1e-4;
  std::vector<std::size_t> hidden = {20, 20};
  std::size_t min_rows = 500;
  // Called after each epoch with (epoch, epochs, loss).
  std::function<void(int, int, double)> progress;
};

// Deterministic for a fixed seed. Levenberg-Marquardt on the regularized
// sum-of-squares objective: every accepted step decreases it, and the
// damping factor plays the role of an adaptive step size.
std::pair<SurrogateModel, TrainReport> train(std::span<const OracleSample> dataset,
                                             const TrainOptions& options = {});

// Bending angle of every module of `a` at its pressure; rigid modules give 0.
std::vector<double> predict_thetas(const SurrogateModel& model, const ActuatorSpec& a);

double mean_squared_error(const SurrogateModel& model, std::span<const OracleSample> samples);

// Versioned JSON. load throws VersionError or FormatError.
void save_model(const SurrogateModel& model, const std::string& path);
SurrogateModel load_model(const std::string& path);

}  // namespace bellow
