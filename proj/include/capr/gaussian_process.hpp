#pragma once

#include <vector>

#include <Eigen/Dense>

namespace capr {

struct GPHyperparameters {
  double length_scale = 0.5;     // in normalized [0, 1] units
  double signal_variance = 1.0;  // sigma_f^2, standardized units
  double noise_variance = 1e-6;  // sigma_n^2, standardized units
};

// sigma_f^2 (1 + sqrt5 r / l + 5 r^2 / (3 l^2)) exp(-sqrt5 r / l)
double matern52(double r, double length_scale, double signal_variance);

struct GPPrediction {
  double mean = 0.0;          // standardized units
  double variance = 0.0;      // clipped at 0
  double raw_variance = 0.0;  // before clipping
};

// Posterior of a zero-mean GP over standardized observations. Immutable once
// fitted.
class GPState {
 public:
  // Prior only.
  GPState(int dim, GPHyperparameters hyper);

  // `points` holds one normalized point per row. Observations are
  // standardized (std = 0 -> unit scale). K + sigma_n^2 I is factorized with
  // jitter escalating x10 from 1e-8, at most 6 times; NumericalError after.
  static GPState fit(const Eigen::MatrixXd& points, const std::vector<double>& values,
                     GPHyperparameters hyper = {});

  GPPrediction predict(const Eigen::VectorXd& x) const;
  // De-standardized posterior mean.
  double predict_value(const Eigen::VectorXd& x) const;

  double standardize(double value) const { return (value - y_mean_) / y_scale_; }
  double destandardize(double value) const { return value * y_scale_ + y_mean_; }
  double best_standardized() const;

  std::size_t observations() const { return static_cast<std::size_t>(points_.rows()); }
  const GPHyperparameters& hyperparameters() const { return hyper_; }
  double jitter() const { return jitter_; }

 private:
  GPHyperparameters hyper_;
  Eigen::MatrixXd points_;
  Eigen::VectorXd y_std_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

// EI for maximization with z = (mu - best - xi) / sigma; max(0, mu - best - xi)
// when sigma = 0.
double expected_improvement(double mu, double sigma, double best, double xi);
double expected_improvement(const GPState& state, const Eigen::VectorXd& x, double best, double xi);

double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace capr
