#include "culsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "culsim/errors.hpp"

namespace culsim {

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw PreconditionError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw PreconditionError("t distribution: df must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw PreconditionError("F distribution: df must be positive");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return regularized_incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) throw PreconditionError("sample std needs at least 2 values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

SimpleRegression ols_simple(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("ols_simple: x and y differ in length");
  if (x.size() < 3) throw PreconditionError("ols_simple: need at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("ols_simple: x is constant");

  SimpleRegression r;
  r.n = x.size();
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  r.r2 = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  const double se = std::sqrt(sse / (n - 2.0) / sxx);
  if (se == 0.0) {
    r.t_stat = r.slope == 0.0 ? 0.0 : std::copysign(kCappedF, r.slope);
    r.p_value = r.slope == 0.0 ? 1.0 : 0.0;
  } else {
    r.t_stat = r.slope / se;
    r.p_value = student_t_two_sided_p(r.t_stat, n - 2.0);
  }
  return r;
}

std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  if (a.size() != n) throw PreconditionError("solve_linear: dimension mismatch");
  double scale = 0.0;
  for (const auto& row : a) {
    if (row.size() != n) throw PreconditionError("solve_linear: matrix is not square");
    for (double v : row) scale = std::max(scale, std::fabs(v));
  }
  if (scale == 0.0) throw PreconditionError("solve_linear: rank deficient system");

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (std::fabs(a[pivot][col]) <= 1e-10 * scale) {
      throw PreconditionError("solve_linear: rank deficient system");
    }
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> z(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * z[c];
    z[i] = s / a[i][i];
  }
  return z;
}

MultipleRegression ols_multiple(std::span<const std::array<double, 2>> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("ols_multiple: X and y differ in length");
  if (x.size() < 4) throw PreconditionError("ols_multiple: need at least 4 points");

  std::vector<std::vector<double>> xtx(3, std::vector<double>(3, 0.0));
  std::vector<double> xty(3, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::array<double, 3> row{1.0, x[i][0], x[i][1]};
    for (std::size_t r = 0; r < 3; ++r) {
      xty[r] += row[r] * y[i];
      for (std::size_t c = 0; c < 3; ++c) xtx[r][c] += row[r] * row[c];
    }
  }
  std::vector<double> beta;
  try {
    beta = solve_linear(std::move(xtx), std::move(xty));
  } catch (const PreconditionError&) {
    throw PreconditionError("ols_multiple: predictor columns are linearly dependent");
  }

  MultipleRegression r;
  r.n = x.size();
  std::copy(beta.begin(), beta.end(), r.coefficients.begin());
  r.df2 = static_cast<double>(x.size()) - 3.0;
  const double my = mean(y);
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (beta[0] + beta[1] * x[i][0] + beta[2] * x[i][1]);
    sse += e * e;
    sst += (y[i] - my) * (y[i] - my);
  }
  r.r2 = sst > 0.0 ? std::max(0.0, 1.0 - sse / sst) : 1.0;
  if (sse <= 1e-20 * std::max(sst, 1.0)) {
    r.f_stat = kCappedF;
    r.p_value = 0.0;
    return r;
  }
  r.f_stat = ((sst - sse) / r.df1) / (sse / r.df2);
  r.p_value = f_survival(r.f_stat, r.df1, r.df2);
  return r;
}

}  // namespace culsim
