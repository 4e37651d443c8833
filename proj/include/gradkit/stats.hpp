#pragma once

#include <span>
#include <vector>

namespace gradkit {

// Arithmetic mean; throws empty_group on an empty sample.
double mean_activation(std::span<const double> values);

// Unbiased sample variance (n - 1 in the denominator); needs two values.
double sample_variance(std::span<const double> values);

struct welch_result {
  double t;
  double df;   // Welch-Satterthwaite degrees of freedom
  double p;    // two-sided
};

// Two-sided Welch test for a difference in means under unequal variances.
// Throws empty_group when either sample has fewer than two values and
// degenerate_variance when both samples have zero variance.
welch_result welch_t_test(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta I_x(a, b), the CDF backbone of the t test.
double betainc_regularized(double a, double b, double x);

// Survival function of Student's t: P(|T| >= t) for df degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace gradkit
