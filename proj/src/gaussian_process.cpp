#include "bellow/gaussian_process.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bellow {

double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& length_scales) {
  const double r = std::sqrt(((a - b).array() / length_scales.array()).square().sum());
  const double s = std::sqrt(5.0) * r;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

bool GaussianProcess::factor(const GpHyperparameters& h, double& lml) {
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0 + h.noise_variance + kJitter;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = matern52(x_[static_cast<std::size_t>(i)], x_[static_cast<std::size_t>(j)], h.length_scales);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return false;
  chol_ = llt.matrixL();
  alpha_ = llt.solve(y_);
  const double quad = y_.dot(alpha_);
  const double nd = static_cast<double>(n);
  h_ = h;
  h_.signal_variance = std::max(quad / nd, 1e-300);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(chol_(i, i));
  lml = -0.5 * nd * std::log(h_.signal_variance) - 0.5 * logdet - 0.5 * nd * (1.0 + std::log(2.0 * std::numbers::pi));
  return std::isfinite(lml);
}

void GaussianProcess::fit(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y,
                          const GpHyperparameters& h) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("GP needs matching, non-empty data");
  x_ = x;
  const auto n = static_cast<Eigen::Index>(y.size());
  y_mean_ = 0.0;
  for (double v : y) y_mean_ += v;
  y_mean_ /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - y_mean_) * (v - y_mean_);
  y_scale_ = n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
  if (!(y_scale_ > 1e-12)) y_scale_ = 1.0;
  y_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) y_[i] = (y[static_cast<std::size_t>(i)] - y_mean_) / y_scale_;
  GpHyperparameters floored = h;
  floored.noise_variance = std::max(h.noise_variance, kNoiseFloor);
  if (!factor(floored, lml_)) throw std::runtime_error("GP covariance is not positive definite");
}

void GaussianProcess::fit(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y) {
  if (x.empty()) throw std::invalid_argument("GP needs data");
  const auto dim = x.front().size();
  static constexpr double kLengths[] = {0.03, 0.06, 0.1, 0.15, 0.25, 0.4, 0.6, 1.0, 1.6, 2.5};
  static constexpr double kNoise[] = {kNoiseFloor, 1e-4, 1e-2, 1e-1};
  static constexpr double kScales[] = {0.25, 0.5, 2.0, 4.0};

  GpHyperparameters best;
  best.length_scales = Eigen::VectorXd::Constant(dim, 0.25);
  fit(x, y, best);
  double best_lml = lml_;
  auto consider = [&](const GpHyperparameters& h) {
    double lml = 0.0;
    if (factor(h, lml) && lml > best_lml) {
      best_lml = lml;
      best = h;
    }
  };
  for (double l : kLengths) {
    for (double g : kNoise) consider({Eigen::VectorXd::Constant(dim, l), 1.0, g});
  }
  for (Eigen::Index d = 0; d < dim; ++d) {
    const GpHyperparameters base = best;
    for (double s : kScales) {
      GpHyperparameters h = base;
      h.length_scales[d] *= s;
      consider(h);
    }
  }
  if (!factor(best, lml_)) throw std::runtime_error("GP covariance is not positive definite");
}

void GaussianProcess::predict(const Eigen::VectorXd& x, double& mean, double& variance) const {
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = matern52(x, x_[static_cast<std::size_t>(i)], h_.length_scales);
  mean = y_mean_ + y_scale_ * k.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double latent = std::max(1.0 - v.squaredNorm(), 0.0);
  variance = h_.signal_variance * latent * y_scale_ * y_scale_;
}

double expected_improvement(double mean, double variance, double best) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  const double gain = best - mean;
  if (sd < 1e-12) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return gain * cdf + sd * pdf;
}

}  // namespace bellow
