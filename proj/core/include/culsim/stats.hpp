#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace culsim {

/// I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// P(F >= f) for the F distribution with (d1, d2) degrees of freedom.
double f_survival(double f, double d1, double d2);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator).
double sample_std(std::span<const double> values);

struct SimpleRegression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

SimpleRegression ols_simple(std::span<const double> x, std::span<const double> y);

struct MultipleRegression {
  /// intercept, b1, b2
  std::array<double, 3> coefficients{};
  double r2 = 0.0;
  double f_stat = 0.0;
  double p_value = 1.0;
  double df1 = 2.0;
  double df2 = 0.0;
  std::size_t n = 0;
};

/// Returned as f_stat when the residual sum of squares is zero.
inline constexpr double kCappedF = 1e300;

MultipleRegression ols_multiple(std::span<const std::array<double, 2>> x, std::span<const double> y);

/// Solves A z = b in place by Gaussian elimination with partial pivoting.
/// Throws PreconditionError when A is (numerically) singular.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b);

}  // namespace culsim
