#pragma once

#include <span>

namespace capr {

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double x, double a, double b);
// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

struct TTestResult {
  double t = 0.0;  // may be +-inf when the differences have zero variance
  double p = 1.0;  // two-sided
};

// Two-sided paired t-test on a - b with n - 1 degrees of freedom.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);
double sample_variance(std::span<const double> v);

}  // namespace capr
