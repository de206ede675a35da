#pragma once

#include <Eigen/Core>
#include <vector>

namespace bellow {

// Matérn-5/2 correlation with per-dimension length scales.
double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& length_scales);

struct GpHyperparameters {
  Eigen::VectorXd length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;  // relative to the signal variance
};

// Zero-mean GP on standardized targets. Inputs are expected in the unit box.
class GaussianProcess {
 public:
  static constexpr double kJitter = 1e-8;
  static constexpr double kNoiseFloor = 1e-6;

  // Chooses hyperparameters by maximizing the log marginal likelihood over a
  // fixed grid (isotropic pass, then per-dimension refinement). The signal
  // variance is profiled out in closed form.
  void fit(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y);
  // Fixed hyperparameters; noise is floored at kNoiseFloor.
  void fit(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y, const GpHyperparameters& h);

  // Posterior mean and variance in the original target units.
  void predict(const Eigen::VectorXd& x, double& mean, double& variance) const;
  double log_marginal_likelihood() const { return lml_; }
  const GpHyperparameters& hyperparameters() const { return h_; }
  std::size_t size() const { return x_.size(); }

 private:
  bool factor(const GpHyperparameters& h, double& lml);

  std::vector<Eigen::VectorXd> x_;
  Eigen::VectorXd y_;  // standardized
  double y_mean_ = 0.0, y_scale_ = 1.0;
  GpHyperparameters h_;
  Eigen::MatrixXd chol_;  // lower factor of K
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

// Expected improvement for minimization.
double expected_improvement(double mean, double variance, double best);

}  // namespace bellow
