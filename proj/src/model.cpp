#include "symphony/model.hpp"

#include <cmath>
#include <limits>

namespace symphony {

double mvn_log_pdf(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& mean, const SpdMatrix& cov) {
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * kLogTwoPi + cov.log_det() + cov.inv_quad_form(x - mean));
}

double wishart_log_pdf(const SpdMatrix& X, const SpdMatrix& scale, double dof) {
  const int d = static_cast<int>(X.dim());
  if (dof < d) throw DofTooSmall("wishart_log_pdf: dof < dim");
  const double trace_term = scale.solve(X.matrix()).trace();
  return 0.5 * (dof - d - 1) * X.log_det() - 0.5 * trace_term -
         0.5 * dof * d * std::log(2.0) - 0.5 * dof * scale.log_det() -
         log_multivariate_gamma(d, 0.5 * dof);
}

double log_lik_expression(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                          double beta, int k, const LatentState& state) {
  const auto& Sigma = state.Sigma[k];
  const double d = static_cast<double>(x.size());
  const Eigen::VectorXd resid = x - alpha * state.mu.col(k);
  return -0.5 * (d * (kLogTwoPi + std::log(beta)) + Sigma.log_det() +
                 Sigma.inv_quad_form(resid) / beta);
}

double log_lik_bulk(const Eigen::Ref<const Eigen::VectorXd>& c_t, const LatentState& state,
                    const HyperParams& hp) {
  const Eigen::VectorXd mix = state.p.transpose() * state.pi;
  const double l = static_cast<double>(c_t.size());
  return -0.5 * (l * (kLogTwoPi + std::log(hp.zeta)) +
                 (c_t - mix).squaredNorm() / hp.zeta);
}

SpdMatrix grn_square(const Eigen::Ref<const Eigen::MatrixXd>& Rk) {
  const Eigen::MatrixXd B = Rk + Rk.transpose();
  Eigen::MatrixXd Rstar = B * B;
  Rstar = 0.5 * (Rstar + Rstar.transpose());
  // Unconditional ridge at the usual 1e-8 * trace / dim scale. Fitted
  // cell scalings can zero the residual variance along the mean direction,
  // which would otherwise let R* and Sigma_k collapse together; the floor
  // keeps the Wishart anchor invertible through that regime.
  const double ridge = default_jitter_eps0(Rstar);
  Rstar.diagonal().array() += ridge;
  return jitter_to_psd(Rstar, ridge).matrix;
}

double log_prior_R(const Eigen::Ref<const Eigen::MatrixXd>& Rk,
                   const Eigen::Ref<const Eigen::VectorXd>& pk,
                   const RegulatoryPrior& prior, const HyperParams& hp) {
  const Eigen::Index d = Rk.rows();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (prior.M(i, j) == 1 && prior.mapping(i, j) < 0)
        throw MappingMissing("log_prior_R: motif entry lacks a mapped region");
  const Eigen::MatrixXd T = prior.edge_mean(pk);
  const double sq = (Rk - T).squaredNorm();
  return -0.5 * static_cast<double>(d * d) * (kLogTwoPi + std::log(hp.lambda)) -
         0.5 * sq / hp.lambda;
}

double log_prior_Sigma(const SpdMatrix& Sigma_k_inv, const SpdMatrix& Rstar, double gamma) {
  const int d = static_cast<int>(Sigma_k_inv.dim());
  if (gamma < d) throw DofTooSmall("log_prior_Sigma: gamma < d");
  // Wishart with scale Rstar^{-1}: trace term tr(Rstar X), normalizer
  // -(gamma/2) ln|Rstar^{-1}| = +(gamma/2) ln|Rstar|.
  const double trace_term = (Rstar.matrix() * Sigma_k_inv.matrix()).trace();
  return 0.5 * (gamma - d - 1) * Sigma_k_inv.log_det() - 0.5 * trace_term -
         0.5 * gamma * d * std::log(2.0) + 0.5 * gamma * Rstar.log_det() -
         log_multivariate_gamma(d, 0.5 * gamma);
}

double log_prior_Sigma_from_cov(const SpdMatrix& Sigma_k, const SpdMatrix& Rstar,
                                double gamma) {
  const int d = static_cast<int>(Sigma_k.dim());
  if (gamma < d) throw DofTooSmall("log_prior_Sigma_from_cov: gamma < d");
  const double trace_term = Sigma_k.solve(Rstar.matrix()).trace();
  return -0.5 * (gamma - d - 1) * Sigma_k.log_det() - 0.5 * trace_term -
         0.5 * gamma * d * std::log(2.0) + 0.5 * gamma * Rstar.log_det() -
         log_multivariate_gamma(d, 0.5 * gamma);
}

double log_prior_p(const Eigen::Ref<const Eigen::VectorXd>& pk, const HyperParams& hp) {
  double lp = 0.0;
  for (Eigen::Index m = 0; m < pk.size(); ++m) {
    if (pk[m] < 0.0) return -std::numeric_limits<double>::infinity();
    const double sd = std::sqrt(hp.Lambda_diag[m]);
    const double zscore = (pk[m] - hp.eta[m]) / sd;
    const double tail = 1.0 - normal_cdf(-hp.eta[m] / sd);  // P(p >= 0)
    lp += normal_logpdf(zscore) - std::log(sd) - std::log(std::max(tail, 1e-300));
  }
  return lp;
}

double log_prior_pi(const Eigen::Ref<const Eigen::VectorXd>& pi, double phi) {
  if (pi.size() < 2) return 0.0;
  const Eigen::VectorXd v = sticks_from_simplex(pi);
  double lp = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k)
    lp += std::log(phi) + (phi - 1.0) * std::log(1.0 - v[k]);
  return lp;
}

JointFactors log_joint_factors(const LatentState& state, const Dataset& data,
                               const RegulatoryPrior& prior, const HyperParams& hp,
                               bool alpha_beta_log_space) {
  JointFactors f;
  const int n = data.n();
  const int d = data.d();
  const int r = data.r();
  const int K = static_cast<int>(state.pi.size());

  for (int j = 0; j < n; ++j) {
    const int k = state.z[j];
    f.expression += log_lik_expression(data.X.col(j), state.alpha[j], state.beta[j], k, state);
    f.z_prior += std::log(std::max(state.pi[k], 1e-300));
  }
  for (int t = 0; t < r; ++t) f.bulk += log_lik_bulk(data.C.col(t), state, hp);
  f.pi_prior = log_prior_pi(state.pi, hp.phi);

  for (int k = 0; k < K; ++k)
    f.mu_k_prior += mvn_log_pdf(state.mu.col(k), state.mu1, state.Sigma1);
  f.mu1_prior = mvn_log_pdf(state.mu1, hp.mu2, hp.Sigma2);

  // Sigma'^{-1} ~ Wishart with scale (d Sigma'')^{-1} and dof d.
  {
    const SpdMatrix dSigma2 = SpdMatrix::from_psd(double(d) * hp.Sigma2.matrix());
    f.sigma1_prior = log_prior_Sigma_from_cov(state.Sigma1, dSigma2, static_cast<double>(d));
  }

  for (int j = 0; j < n; ++j) {
    const double la = std::log(state.alpha[j]);
    const double lb = std::log(state.beta[j]);
    f.alpha_prior += normal_logpdf((la - hp.nu) / hp.delta) - std::log(hp.delta);
    f.beta_prior += normal_logpdf((lb - hp.omega) / hp.theta) - std::log(hp.theta);
    if (!alpha_beta_log_space) {
      f.alpha_prior -= la;  // lognormal Jacobian
      f.beta_prior -= lb;
    }
  }

  for (int k = 0; k < K; ++k) {
    const SpdMatrix Rstar = grn_square(state.R[k]);
    f.sigma_k_prior += log_prior_Sigma_from_cov(state.Sigma[k], Rstar, hp.gamma);
    f.r_prior += log_prior_R(state.R[k], state.p.row(k), prior, hp);
    f.p_prior += log_prior_p(state.p.row(k), hp);
  }
  return f;
}

double log_joint(const LatentState& state, const Dataset& data,
                 const RegulatoryPrior& prior, const HyperParams& hp) {
  return log_joint_factors(state, data, prior, hp, false).total();
}

Eigen::MatrixXd build_sign_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::Index d = X.rows();
  const Eigen::Index n = X.cols();
  if (n < 2) throw DataError("build_sign_matrix: need at least two cells");
  const Eigen::VectorXd mean = X.rowwise().mean();
  const Eigen::MatrixXd centered = X.colwise() - mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(n - 1);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (std::abs(cov(i, j)) >= 1e-12) S(i, j) = cov(i, j) > 0 ? 1.0 : -1.0;
  return S;
}

IdentifiabilityReport check_identifiability_condition(const LatentState& state,
                                                      const HyperParams& hp) {
  const int n = static_cast<int>(state.alpha.size());
  const int K = static_cast<int>(state.pi.size());
  const Eigen::VectorXd sig1_diag = state.Sigma1.matrix().diagonal();
  IdentifiabilityReport rep;
  rep.ok.resize(n, K);
  int count = 0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd bound =
        state.mu1 + sig1_diag * ((state.alpha[j] - hp.nu) / hp.delta);
    for (int k = 0; k < K; ++k) {
      const bool holds = (state.mu.col(k).array() >= bound.array() - 1e-12).all();
      rep.ok(j, k) = holds ? 1 : 0;
      count += holds ? 1 : 0;
    }
  }
  rep.fraction_ok = n * K > 0 ? static_cast<double>(count) / (n * K) : 1.0;
  return rep;
}

}  // namespace symphony
