#pragma once

#include <Eigen/Dense>

#include "symphony/types.hpp"

namespace symphony {

/// log N(x | mean, cov) in log space through the cached Cholesky factor.
double mvn_log_pdf(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& mean, const SpdMatrix& cov);

/// Wishart log-density of X with the given scale matrix and dof:
/// (dof-d-1)/2 ln|X| - tr(scale^{-1} X)/2 - normalizer.
double wishart_log_pdf(const SpdMatrix& X, const SpdMatrix& scale, double dof);

/// log N(x | alpha * mu_k, beta * Sigma_k) for one cell against one cluster.
double log_lik_expression(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                          double beta, int k, const LatentState& state);

/// log N(c_t | sum_k pi_k p_k, zeta I).
double log_lik_bulk(const Eigen::Ref<const Eigen::VectorXd>& c_t, const LatentState& state,
                    const HyperParams& hp);

/// Squared symmetrized network (R + R^T)^2, nudged onto the PSD cone when
/// numerically necessary. This is the Wishart anchor R*_k.
SpdMatrix grn_square(const Eigen::Ref<const Eigen::MatrixXd>& Rk);

/// sum_{i,i'} log N(Rk[i,i'] | S*M*pk[g(i,i')], lambda); unmapped entries get
/// mean zero.
double log_prior_R(const Eigen::Ref<const Eigen::MatrixXd>& Rk,
                   const Eigen::Ref<const Eigen::VectorXd>& pk,
                   const RegulatoryPrior& prior, const HyperParams& hp);

/// Wishart log-density with scale Rstar^{-1} and dof gamma evaluated at the
/// precision Sigma_k_inv, so E[Sigma_k^{-1}] = gamma * Rstar^{-1}.
double log_prior_Sigma(const SpdMatrix& Sigma_k_inv, const SpdMatrix& Rstar, double gamma);

/// Same prior evaluated from the covariance side (avoids forming the
/// inverse explicitly).
double log_prior_Sigma_from_cov(const SpdMatrix& Sigma_k, const SpdMatrix& Rstar,
                                double gamma);

/// Coordinatewise truncated-normal log-density of a peak profile.
double log_prior_p(const Eigen::Ref<const Eigen::VectorXd>& pk, const HyperParams& hp);

/// Stick-breaking Beta(1, phi) log-density of the sticks implied by pi.
double log_prior_pi(const Eigen::Ref<const Eigen::VectorXd>& pi, double phi);

/// Every factor of the joint evaluated separately; total() is their sum.
struct JointFactors {
  double expression = 0.0;    // sum_j ln N(x_j | a_j mu_{z_j}, b_j Sigma_{z_j})
  double bulk = 0.0;          // sum_t ln N(c_t | mix, zeta I)
  double z_prior = 0.0;       // sum_j ln pi_{z_j}
  double pi_prior = 0.0;      // stick-breaking Beta(1, phi)
  double mu_k_prior = 0.0;    // sum_k ln N(mu_k | mu', Sigma')
  double mu1_prior = 0.0;     // ln N(mu' | mu'', Sigma'')
  double sigma1_prior = 0.0;  // ln Wish(Sigma'^{-1} | (d Sigma'')^{-1}, d)
  double alpha_prior = 0.0;
  double beta_prior = 0.0;
  double sigma_k_prior = 0.0;  // sum_k ln Wish(Sigma_k^{-1} | R*_k^{-1}, gamma)
  double r_prior = 0.0;        // sum_k log_prior_R
  double p_prior = 0.0;        // sum_k log_prior_p

  double total() const {
    return expression + bulk + z_prior + pi_prior + mu_k_prior + mu1_prior +
           sigma1_prior + alpha_prior + beta_prior + sigma_k_prior + r_prior + p_prior;
  }
};

/// All factors of the joint at a full latent assignment (hard labels z).
/// With alpha_beta_log_space set, the cell-scaling priors are evaluated as
/// Gaussians on ln(alpha), ln(beta) without the lognormal Jacobian; that is
/// the parametrization the EM engine maximizes in.
JointFactors log_joint_factors(const LatentState& state, const Dataset& data,
                               const RegulatoryPrior& prior, const HyperParams& hp,
                               bool alpha_beta_log_space = false);

double log_joint(const LatentState& state, const Dataset& data,
                 const RegulatoryPrior& prior, const HyperParams& hp);

/// Sign of the empirical covariance between genes; entries with
/// |cov| < 1e-12 are zeroed. Requires n >= 2 cells.
Eigen::MatrixXd build_sign_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Componentwise check of mu_k >= mu' + diag(Sigma') (alpha_j - nu) / delta
/// for every (cell, cluster) pair. Diagnostic only, never enforced.
struct IdentifiabilityReport {
  Eigen::MatrixXi ok;  // n x K, 1 where the condition holds for all genes
  double fraction_ok = 0.0;
};

IdentifiabilityReport check_identifiability_condition(const LatentState& state,
                                                      const HyperParams& hp);

}  // namespace symphony
