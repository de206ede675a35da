#include "bellow/surrogate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bellow/error.hpp"
#include "bellow/json_io.hpp"
#include "bellow/rng.hpp"
#include "bellow/simd/kernels.hpp"

namespace bellow {

double Normalization::to_unit(std::size_t i, double v) const {
  return 2.0 * (v - input_min[i]) / (input_max[i] - input_min[i]) - 1.0;
}

double Normalization::output_from_unit(double u) const {
  return output_min + 0.5 * (u + 1.0) * (output_max - output_min);
}

double Normalization::output_to_unit(double v) const {
  return 2.0 * (v - output_min) / (output_max - output_min) - 1.0;
}

std::vector<std::size_t> SurrogateModel::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(layers.front().inputs);
  for (const auto& l : layers) sizes.push_back(l.outputs);
  return sizes;
}

std::size_t SurrogateModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> SurrogateModel::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void SurrogateModel::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw std::invalid_argument("parameter vector size mismatch");
  std::size_t o = 0;
  for (auto& l : layers) {
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(o), l.weights.size(), l.weights.begin());
    o += l.weights.size();
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(o), l.bias.size(), l.bias.begin());
    o += l.bias.size();
  }
}

Prediction SurrogateModel::predict(const SurrogateInput& x) const {
  Prediction out;
  std::vector<double> a(kSurrogateInputs), z;
  for (std::size_t i = 0; i < kSurrogateInputs; ++i) {
    const double range = norm.input_max[i] - norm.input_min[i];
    const double excess = std::max(norm.input_min[i] - x[i], x[i] - norm.input_max[i]);
    if (excess > 0.0) out.extrapolation = std::max(out.extrapolation, excess / range);
    a[i] = norm.to_unit(i, x[i]);
  }
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    z.assign(l.bias.begin(), l.bias.end());
    for (std::size_t j = 0; j < l.outputs; ++j) {
      const double* w = &l.weights[j * l.inputs];
      for (std::size_t k = 0; k < l.inputs; ++k) z[j] += w[k] * a[k];
      if (li + 1 < layers.size()) z[j] = std::tanh(z[j]);
    }
    a.swap(z);
  }
  out.theta = std::clamp(norm.output_from_unit(a[0]), 0.0, std::numbers::pi);
  out.extrapolation_warning = out.extrapolation > kExtrapolationWarning;
  return out;
}

Prediction SurrogateModel::predict(const ModuleDesign& d, double pressure_kpa) const {
  return predict(SurrogateInput{d.r_in, d.t, d.R, d.l, pressure_kpa});
}

SurrogateModel make_network(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2 || sizes.front() != kSurrogateInputs || sizes.back() != 1) {
    throw std::invalid_argument("network must map 5 inputs to 1 output");
  }
  SurrogateModel m;
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    DenseLayer l;
    l.inputs = sizes[i];
    l.outputs = sizes[i + 1];
    const double s = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
    l.weights.resize(l.inputs * l.outputs);
    for (auto& w : l.weights) w = rng.uniform(-s, s);
    l.bias.assign(l.outputs, 0.0);
    m.layers.push_back(std::move(l));
  }
  return m;
}

TrainingBatch make_batch(const Normalization& norm, std::span<const OracleSample> samples,
                         std::span<const std::size_t> indices) {
  TrainingBatch b;
  b.rows = indices.size();
  b.x.resize(kSurrogateInputs * b.rows);
  b.y.resize(b.rows);
  for (std::size_t r = 0; r < b.rows; ++r) {
    const auto& s = samples[indices[r]];
    const SurrogateInput in{s.r_in, s.t, s.R, s.l, s.P};
    for (std::size_t k = 0; k < kSurrogateInputs; ++k) b.x[k * b.rows + r] = norm.to_unit(k, in[k]);
    b.y[r] = norm.output_to_unit(s.theta);
  }
  return b;
}

namespace {

// Activations of every layer for a batch, feature-major. acts[0] aliases the
// batch inputs; acts[i] holds layer i's output (tanh applied except the last).
struct Forward {
  std::vector<std::vector<double>> acts;
};

void forward(const SurrogateModel& m, const TrainingBatch& b, Forward& f) {
  const auto& k = simd::active_kernels();
  const std::size_t n = b.rows;
  f.acts.resize(m.layers.size() + 1);
  f.acts[0] = b.x;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const auto& l = m.layers[li];
    const auto& in = f.acts[li];
    auto& out = f.acts[li + 1];
    out.resize(l.outputs * n);
    for (std::size_t j = 0; j < l.outputs; ++j) {
      double* z = &out[j * n];
      std::fill(z, z + n, l.bias[j]);
      for (std::size_t q = 0; q < l.inputs; ++q) k.axpy(l.weights[j * l.inputs + q], &in[q * n], z, n);
      if (li + 1 < m.layers.size()) {
        for (std::size_t r = 0; r < n; ++r) z[r] = std::tanh(z[r]);
      }
    }
  }
}

double weight_penalty(const SurrogateModel& m) {
  const auto& k = simd::active_kernels();
  double s = 0.0;
  for (const auto& l : m.layers) s += k.dot(l.weights.data(), l.weights.data(), l.weights.size());
  return s;
}

// Backpropagates per-row output sensitivities `delta` (length n) through the
// network. `sink(p, delta, input)` is called once per flat parameter index p
// with the sensitivity of its unit and the input column it multiplies (null
// for biases).
template <typename Sink>
void backward(const SurrogateModel& m, const Forward& f, std::vector<double> delta, std::size_t n, Sink&& sink) {
  const auto& k = simd::active_kernels();
  std::vector<std::size_t> offset(m.layers.size());
  std::size_t o = 0;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    offset[li] = o;
    o += m.layers[li].weights.size() + m.layers[li].bias.size();
  }
  std::vector<double> prev;
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const auto& l = m.layers[li];
    const auto& in = f.acts[li];
    for (std::size_t j = 0; j < l.outputs; ++j) {
      const double* dj = &delta[j * n];
      for (std::size_t q = 0; q < l.inputs; ++q) sink(offset[li] + j * l.inputs + q, dj, &in[q * n]);
      sink(offset[li] + l.weights.size() + j, dj, nullptr);
    }
    if (li == 0) break;
    prev.assign(l.inputs * n, 0.0);
    for (std::size_t j = 0; j < l.outputs; ++j) {
      for (std::size_t q = 0; q < l.inputs; ++q) k.axpy(l.weights[j * l.inputs + q], &delta[j * n], &prev[q * n], n);
    }
    for (std::size_t q = 0; q < l.inputs; ++q) k.mul_one_minus_sq(&in[q * n], &prev[q * n], n);
    delta.swap(prev);
  }
}

// Marks which entries of the flat parameter vector are (penalized) weights.
std::vector<char> weight_mask(const SurrogateModel& m) {
  std::vector<char> mask;
  for (const auto& l : m.layers) {
    mask.insert(mask.end(), l.weights.size(), 1);
    mask.insert(mask.end(), l.bias.size(), 0);
  }
  return mask;
}

double batch_sse(const SurrogateModel& m, const TrainingBatch& b, Forward& f) {
  forward(m, b, f);
  return simd::active_kernels().squared_distance(f.acts.back().data(), b.y.data(), b.rows);
}

void check_dataset(std::span<const OracleSample> data, std::size_t min_rows) {
  if (data.size() < min_rows) {
    throw ValidationError("dataset too small",
                          {"rows >= " + std::to_string(min_rows) + " (got " + std::to_string(data.size()) + ")"});
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    for (double v : {s.r_in, s.t, s.R, s.l, s.P, s.theta}) {
      if (!std::isfinite(v)) throw ValidationError("non-finite dataset value", {"row " + std::to_string(i)});
    }
  }
}

Normalization fit_normalization(std::span<const OracleSample> data) {
  Normalization n;
  n.input_min.fill(std::numeric_limits<double>::infinity());
  n.input_max.fill(-std::numeric_limits<double>::infinity());
  n.output_min = std::numeric_limits<double>::infinity();
  n.output_max = -std::numeric_limits<double>::infinity();
  static constexpr std::array<const char*, kSurrogateInputs> kNames = {"r_in", "t", "R", "l", "P"};
  for (const auto& s : data) {
    const SurrogateInput in{s.r_in, s.t, s.R, s.l, s.P};
    for (std::size_t k = 0; k < kSurrogateInputs; ++k) {
      n.input_min[k] = std::min(n.input_min[k], in[k]);
      n.input_max[k] = std::max(n.input_max[k], in[k]);
    }
    n.output_min = std::min(n.output_min, s.theta);
    n.output_max = std::max(n.output_max, s.theta);
  }
  std::vector<std::string> flat;
  for (std::size_t k = 0; k < kSurrogateInputs; ++k) {
    if (!(n.input_max[k] - n.input_min[k] > 1e-12)) flat.push_back(std::string(kNames[k]) + " has zero range");
  }
  if (!flat.empty()) throw ValidationError("degenerate dataset", flat);
  // A constant target keeps a unit-width output map centred on it.
  if (!(n.output_max - n.output_min > 1e-12)) {
    n.output_min -= 1.0;
    n.output_max += 1.0;
  }
  return n;
}

}  // namespace

double objective(const SurrogateModel& model, const TrainingBatch& batch, double lambda,
                 std::vector<double>* gradient) {
  Forward f;
  const double sse = batch_sse(model, batch, f);
  const double value = sse + lambda * weight_penalty(model);
  if (!gradient) return value;

  const auto& k = simd::active_kernels();
  const std::size_t n = batch.rows;
  std::vector<double> delta(f.acts.back());
  k.axpy(-1.0, batch.y.data(), delta.data(), n);
  for (double& d : delta) d *= 2.0;
  gradient->assign(model.parameter_count(), 0.0);
  backward(model, f, std::move(delta), n, [&](std::size_t p, const double* dj, const double* in) {
    (*gradient)[p] = in ? k.dot(dj, in, n) : k.sum(dj, n);
  });
  const auto mask = weight_mask(model);
  const auto params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (mask[p]) (*gradient)[p] += 2.0 * lambda * params[p];
  }
  return value;
}

std::vector<double> predict_thetas(const SurrogateModel& model, const ActuatorSpec& a) {
  std::vector<double> out;
  out.reserve(a.modules.size());
  for (const auto& m : a.modules) out.push_back(m.rigid ? 0.0 : model.theta(m, a.pressure_kpa));
  return out;
}

double mean_squared_error(const SurrogateModel& model, std::span<const OracleSample> samples) {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& row : samples) {
    const double d = model.predict(SurrogateInput{row.r_in, row.t, row.R, row.l, row.P}).theta - row.theta;
    s += d * d;
  }
  return s / static_cast<double>(samples.size());
}

std::pair<SurrogateModel, TrainReport> train(std::span<const OracleSample> dataset, const TrainOptions& opt) {
  check_dataset(dataset, opt.min_rows);
  if (!(opt.split_ratio > 0.0 && opt.split_ratio < 1.0)) throw std::invalid_argument("split_ratio must be in (0, 1)");
  if (opt.epochs < 0) throw std::invalid_argument("epochs must be >= 0");

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(opt.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[split_rng.index(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(opt.split_ratio * static_cast<double>(order.size())));
  const std::span<const std::size_t> train_idx(order.data(), n_train);
  const std::span<const std::size_t> test_idx(order.data() + n_train, order.size() - n_train);

  std::vector<std::size_t> sizes{kSurrogateInputs};
  sizes.insert(sizes.end(), opt.hidden.begin(), opt.hidden.end());
  sizes.push_back(1);
  SurrogateModel model = make_network(sizes, mix_seed(opt.seed, 0x696e6974));
  std::vector<OracleSample> train_rows;
  for (auto i : train_idx) train_rows.push_back(dataset[i]);
  model.norm = fit_normalization(train_rows);
  const TrainingBatch batch = make_batch(model.norm, dataset, train_idx);

  const auto& k = simd::active_kernels();
  const std::size_t n = batch.rows;
  const std::size_t np = model.parameter_count();
  const auto mask = weight_mask(model);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(np));
  Eigen::MatrixXd jtj(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
  Eigen::VectorXd grad(static_cast<Eigen::Index>(np)), reg(static_cast<Eigen::Index>(np));
  for (std::size_t p = 0; p < np; ++p) reg[static_cast<Eigen::Index>(p)] = mask[p] ? opt.lambda : 0.0;

  TrainReport report;
  report.split_seed = opt.seed;
  report.train_rows = n;
  report.test_rows = test_idx.size();

  Forward f;
  double loss = batch_sse(model, batch, f) + opt.lambda * weight_penalty(model);
  if (!std::isfinite(loss)) throw std::runtime_error("non-finite training loss");
  double damping = 1e-3;
  constexpr double kMaxDamping = 1e10;
  int epoch = 0;
  for (; epoch < opt.epochs; ++epoch) {
    // Jacobian of the residuals, one contiguous column per parameter.
    forward(model, batch, f);
    std::vector<double> resid(f.acts.back());
    k.axpy(-1.0, batch.y.data(), resid.data(), n);
    backward(model, f, std::vector<double>(n, 1.0), n, [&](std::size_t p, const double* dj, const double* in) {
      double* col = jac.col(static_cast<Eigen::Index>(p)).data();
      if (in) {
        k.mul(dj, in, col, n);
      } else {
        std::copy_n(dj, n, col);
      }
    });
    const auto params = model.parameters();
    for (std::size_t p = 0; p < np; ++p) {
      const auto ip = static_cast<Eigen::Index>(p);
      grad[ip] = k.dot(jac.col(ip).data(), resid.data(), n) + reg[ip] * params[p];
    }
    jtj.setZero();
    jtj.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
    jtj.diagonal() += reg;

    bool accepted = false;
    while (damping <= kMaxDamping) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal().array() += damping;
      Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(lhs);
      if (llt.info() == Eigen::Success) {
        const Eigen::VectorXd step = llt.solve(-grad);
        std::vector<double> trial(params);
        for (std::size_t p = 0; p < np; ++p) trial[p] += step[static_cast<Eigen::Index>(p)];
        SurrogateModel candidate = model;
        candidate.set_parameters(trial);
        const double trial_loss = batch_sse(candidate, batch, f) + opt.lambda * weight_penalty(candidate);
        if (std::isfinite(trial_loss) && trial_loss < loss) {
          model = std::move(candidate);
          loss = trial_loss;
          damping = std::max(damping * 0.1, 1e-20);
          accepted = true;
          break;
        }
      }
      damping *= 10.0;
    }
    report.loss_history.push_back(loss / static_cast<double>(n));
    if (opt.progress) opt.progress(epoch + 1, opt.epochs, loss / static_cast<double>(n));
    if (!accepted) {
      ++epoch;
      break;
    }
  }

  std::vector<OracleSample> test_rows;
  for (auto i : test_idx) test_rows.push_back(dataset[i]);
  report.epochs = epoch;
  report.final_loss = loss / static_cast<double>(n);
  report.train_mse = mean_squared_error(model, train_rows);
  report.test_mse = mean_squared_error(model, test_rows);
  model.report = report;
  model.report.loss_history.clear();
  return {std::move(model), std::move(report)};
}

void save_model(const SurrogateModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write model file '" + path + "'");
  os << model_text(model);
  if (!os) throw IoError("failed writing model file '" + path + "'");
}

SurrogateModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read model file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return model_from_json(parse_json(ss.str()));
}

}  // namespace bellow
