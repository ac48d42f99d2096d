#include "symphony/samplers.hpp"

#include <cmath>

#include "symphony/math.hpp"

namespace symphony {

SpdMatrix sample_wishart_bartlett(const SpdMatrix& scale, double dof, RngStream& rng) {
  const Eigen::Index d = scale.dim();
  if (dof < static_cast<double>(d))
    throw DofTooSmall("sample_wishart_bartlett: dof < dim");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  const Eigen::MatrixXd G = scale.chol() * A;
  Eigen::MatrixXd W = G * G.transpose();
  W = 0.5 * (W + W.transpose());
  return jitter_to_psd(W, default_jitter_eps0(W)).matrix;
}

double sample_trunc_normal_scalar(double mean, double sd, double lo, RngStream& rng) {
  if (!std::isfinite(lo)) throw DomainError("sample_trunc_normal: lo must be finite");
  if (!(sd > 0.0)) return std::max(mean, lo);
  const double a = (lo - mean) / sd;
  const double accept = 0.5 * std::erfc(a * M_SQRT1_2);  // P(Z >= a)
  if (accept >= 0.01) {
    for (int it = 0; it < 1000; ++it) {
      const double z = rng.normal();
      if (z >= a) return mean + sd * z;
    }
  }
  // Inverse-CDF fallback on the complementary tail: q uniform in
  // (0, P(Z >= a)) keeps full precision arbitrarily far out, where
  // Phi(a) itself would round to 1.
  const double q = std::max(accept * rng.uniform(), 1e-300);
  const double z = -normal_quantile(q);
  return std::max(lo, mean + sd * z);
}

Eigen::VectorXd sample_trunc_normal(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                    const Eigen::Ref<const Eigen::VectorXd>& var_diag,
                                    double lo, RngStream& rng) {
  if (mean.size() != var_diag.size())
    throw ShapeMismatch("sample_trunc_normal: mean/var sizes differ");
  Eigen::VectorXd out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    out[i] = sample_trunc_normal_scalar(mean[i], std::sqrt(var_diag[i]), lo, rng);
  return out;
}

Eigen::VectorXd sample_mvn(const Eigen::Ref<const Eigen::VectorXd>& mean,
                           const SpdMatrix& cov, RngStream& rng) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + cov.chol() * z;
}

}  // namespace symphony
