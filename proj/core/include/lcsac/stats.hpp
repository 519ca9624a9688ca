#pragma once

#include <cstdint>
#include <span>

namespace lcsac {

double mean_of(std::span<const double> xs);
/// Sample standard deviation (ddof = 1); 0 for fewer than two values.
double std_of(std::span<const double> xs);

/// Regularized incomplete beta function I_x(a, b) via Lentz's continued
/// fraction.
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with `df` degrees of freedom.
double student_t_cdf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_one_sided = 1.0;  // H1: mean(a) > mean(b)
  double p_two_sided = 1.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

/// Welch's unequal-variance t-test. Requires at least two samples per side.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace lcsac
