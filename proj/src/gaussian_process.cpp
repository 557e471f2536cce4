#include "capr/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "capr/error.hpp"

namespace capr {

double matern52(double r, double length_scale, double signal_variance) {
  const double a = std::sqrt(5.0) * r / length_scale;
  return signal_variance * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

GPState::GPState(int dim, GPHyperparameters hyper) : hyper_(hyper), points_(0, dim) {}

GPState GPState::fit(const Eigen::MatrixXd& points, const std::vector<double>& values,
                     GPHyperparameters hyper) {
  if (points.rows() != static_cast<Eigen::Index>(values.size())) {
    throw InvalidArgument("gp_fit: point/value count mismatch");
  }
  if (!(hyper.length_scale > 0.0) || !(hyper.signal_variance > 0.0) || hyper.noise_variance < 0.0) {
    throw InvalidArgument("gp_fit: invalid hyperparameters");
  }
  GPState state(static_cast<int>(points.cols()), hyper);
  const auto n = points.rows();
  if (n == 0) return state;
  state.points_ = points;

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  state.y_mean_ = mean;
  state.y_scale_ = sd > 0.0 ? sd : 1.0;
  state.y_std_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    state.y_std_(i) = state.standardize(values[static_cast<std::size_t>(i)]);
  }

  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = matern52((points.row(i) - points.row(j)).norm(), hyper.length_scale,
                                hyper.signal_variance);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += hyper.noise_variance;
  }

  double jitter = 0.0;
  for (int escalation = 0;; ++escalation) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    state.llt_.compute(kj);
    if (state.llt_.info() == Eigen::Success) break;
    if (escalation == 6) throw NumericalError("gp_fit: covariance not positive definite after jitter");
    jitter = jitter == 0.0 ? 1e-8 : jitter * 10.0;
  }
  state.jitter_ = jitter;
  state.alpha_ = state.llt_.solve(state.y_std_);
  return state;
}

GPPrediction GPState::predict(const Eigen::VectorXd& x) const {
  if (x.size() != points_.cols()) throw InvalidArgument("gp predict: dimension mismatch");
  GPPrediction p;
  if (points_.rows() == 0) {
    p.mean = 0.0;
    p.variance = p.raw_variance = hyper_.signal_variance;
    return p;
  }
  Eigen::VectorXd ks(points_.rows());
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    ks(i) = matern52((points_.row(i).transpose() - x).norm(), hyper_.length_scale,
                     hyper_.signal_variance);
  }
  p.mean = ks.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(ks);
  p.raw_variance = hyper_.signal_variance - v.squaredNorm();
  p.variance = std::max(0.0, p.raw_variance);
  return p;
}

double GPState::predict_value(const Eigen::VectorXd& x) const { return destandardize(predict(x).mean); }

double GPState::best_standardized() const {
  if (y_std_.size() == 0) throw InvalidArgument("no observations");
  return y_std_.maxCoeff();
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mu, double sigma, double best, double xi) {
  const double gain = mu - best - xi;
  if (!(sigma > 0.0)) return std::max(0.0, gain);
  const double z = gain / sigma;
  // The closed form can dip a hair below zero through cancellation far in the
  // left tail.
  return std::max(0.0, gain * normal_cdf(z) + sigma * normal_pdf(z));
}

double expected_improvement(const GPState& state, const Eigen::VectorXd& x, double best, double xi) {
  const auto p = state.predict(x);
  return expected_improvement(p.mean, std::sqrt(p.variance), best, xi);
}

}  // namespace capr
