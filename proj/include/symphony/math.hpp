#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "symphony/errors.hpp"

namespace symphony {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Digamma function for x > 0, accurate to ~1e-12 (recurrence into the
/// asymptotic regime, then the standard Bernoulli-number series).
template <typename Scalar = double>
Scalar digamma(Scalar x) {
  if (!(x > Scalar(0))) throw DomainError("digamma: argument must be positive");
  Scalar result = 0;
  while (x < Scalar(8)) {
    result -= Scalar(1) / x;
    x += Scalar(1);
  }
  const Scalar inv = Scalar(1) / x;
  const Scalar inv2 = inv * inv;
  // psi(x) ~ ln x - 1/(2x) - sum  B_2n / (2n x^{2n})
  result += std::log(x) - Scalar(0.5) * inv -
            inv2 * (Scalar(1.0 / 12.0) -
                    inv2 * (Scalar(1.0 / 120.0) -
                            inv2 * (Scalar(1.0 / 252.0) -
                                    inv2 * (Scalar(1.0 / 240.0) -
                                            inv2 * Scalar(1.0 / 132.0)))));
  return result;
}

/// log of the multivariate gamma function Gamma_d(a).
inline double log_multivariate_gamma(int d, double a) {
  double s = 0.25 * d * (d - 1) * std::log(M_PI);
  for (int i = 0; i < d; ++i) s += std::lgamma(a - 0.5 * i);
  return s;
}

/// Numerically stable log(sum(exp(v))).
inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// Standard normal log-density.
inline double normal_logpdf(double x) { return -0.5 * (kLogTwoPi + x * x); }

/// Inverse standard normal CDF (Acklam's rational approximation polished by
/// two Newton steps against erfc; good to ~1e-14 over (0,1)).
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

/// Stick-breaking map: v in (0,1)^{K-1} -> simplex of length K.
/// pi_k = v_k * prod_{i<k} (1 - v_i); the last component is the remainder,
/// taken by subtraction so the sum is exactly 1.
inline Eigen::VectorXd stick_break(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index K = v.size() + 1;
  for (Eigen::Index k = 0; k + 1 < K; ++k) {
    if (!(v[k] > 0.0) || !(v[k] < 1.0))
      throw DomainError("stick_break: stick fractions must lie in (0,1)");
  }
  Eigen::VectorXd pi(K);
  double remaining = 1.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k + 1 < K; ++k) {
    pi[k] = v[k] * remaining;
    remaining *= (1.0 - v[k]);
    acc += pi[k];
  }
  pi[K - 1] = 1.0 - acc;
  return pi;
}

/// Inverse of stick_break on the interior of the simplex.
inline Eigen::VectorXd sticks_from_simplex(const Eigen::Ref<const Eigen::VectorXd>& pi) {
  const Eigen::Index K = pi.size();
  Eigen::VectorXd v(K - 1);
  double remaining = 1.0;
  for (Eigen::Index k = 0; k + 1 < K; ++k) {
    v[k] = std::min(1.0 - 1e-15, std::max(1e-15, pi[k] / std::max(remaining, 1e-300)));
    remaining -= pi[k];
  }
  return v;
}

}  // namespace symphony
