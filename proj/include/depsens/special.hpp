#pragma once

// Scalar special functions: normal / Student-t / beta CDFs and quantiles.
// Quantiles use rational initial guesses polished by safeguarded Newton steps;
// the incomplete beta uses the modified-Lentz continued fraction. Accuracy
// target 1e-10 absolute across the composition chains used by the dependency
// models.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace depsens {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

// Acklam's rational approximation (|rel err| < 1.2e-9) plus one Halley step.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  // Halley polish on F(x) - p = 0.
  const double e = norm_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double ibeta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300, eps = 3e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 400; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double ibeta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::domain_error("ibeta: a,b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lnfront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(lnfront);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::ibeta_cf(a, b, x) / a;
  return 1.0 - front * detail::ibeta_cf(b, a, 1.0 - x) / b;
}

// Inverse of I_x(a,b): initial guess (Abramowitz & Stegun 26.5.22 style) plus
// Newton with a bisection safeguard.
inline double ibeta_inv(double a, double b, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("ibeta_inv: p outside [0,1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  double x;
  if (a >= 1.0 && b >= 1.0) {
    const double pp = (p < 0.5) ? p : 1.0 - p;
    const double t = std::sqrt(-2.0 * std::log(pp));
    double z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
    if (p < 0.5) z = -z;
    const double al = (z * z - 3.0) / 6.0;
    const double h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
    const double w = z * std::sqrt(al + h) / h -
                     (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) *
                         (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
    x = a / (a + b * std::exp(2.0 * w));
  } else {
    const double lna = std::log(a / (a + b)), lnb = std::log(b / (a + b));
    const double t = std::exp(a * lna) / a, u = std::exp(b * lnb) / b, s = t + u;
    if (p < t / s)
      x = std::pow(a * s * p, 1.0 / a);
    else
      x = 1.0 - std::pow(b * s * (1.0 - p), 1.0 / b);
  }
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double lo = 0.0, hi = 1.0;
  x = std::min(std::max(x, 1e-300), 1.0 - 1e-16);
  for (int it = 0; it < 100; ++it) {
    const double f = ibeta(a, b, x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double logpdf =
        (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta;
    double xn = x - f * std::exp(-logpdf);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::fabs(xn - x) <= 1e-15 * (std::fabs(x) + 1e-30)) return xn;
    x = xn;
  }
  return x;
}

inline double t_pdf(double x, double nu) {
  const double lg = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                    0.5 * std::log(nu * 3.14159265358979323846);
  return std::exp(lg - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

inline double t_cdf(double x, double nu) {
  if (!(nu > 0.0)) throw std::domain_error("t_cdf: nu must be positive");
  if (x == 0.0) return 0.5;
  const double tail = 0.5 * ibeta(0.5 * nu, 0.5, nu / (nu + x * x));
  return x > 0.0 ? 1.0 - tail : tail;
}

inline double t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("t_quantile: p outside (0,1)");
  if (p == 0.5) return 0.0;
  const double pp = 2.0 * std::min(p, 1.0 - p);
  const double w = ibeta_inv(0.5 * nu, 0.5, pp);  // = nu/(nu+x^2)
  double x = (w > 0.0) ? std::sqrt(nu * (1.0 - w) / w)
                       : std::numeric_limits<double>::infinity();
  if (p < 0.5) x = -x;
  // one Newton polish on the CDF
  if (std::isfinite(x)) {
    const double err = t_cdf(x, nu) - p;
    const double dens = t_pdf(x, nu);
    if (dens > 0.0) x -= err / dens;
  }
  return x;
}

inline double beta_cdf(double x, double alpha, double beta) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return ibeta(alpha, beta, x);
}

inline double beta_quantile(double p, double alpha, double beta) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("beta_quantile: p outside [0,1]");
  return ibeta_inv(alpha, beta, p);
}

}  // namespace depsens
