#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "symphony/model.hpp"
#include "symphony/types.hpp"

namespace symphony {

struct FitConfig {
  int K = 0;  // cluster count; 0 infers it from labels (default 3)
  int max_outer_iters = 200;
  double elbo_rel_tol = 1e-7;

  enum class EStepMode { soft, map };
  EStepMode e_step_mode = EStepMode::soft;
  int z_update_period = 5;  // hard z refresh cadence

  enum class Init { kmeans, random, provided };
  Init init = Init::kmeans;
  Eigen::VectorXi init_labels;  // used with Init::provided

  double ridge_eps0 = 1e-8;
  bool learn_M = false;
  std::optional<Eigen::VectorXi> fixed_z;   // freeze clustering (PBMC protocol)
  std::optional<Eigen::VectorXd> fixed_pi;  // freeze mixture weights

  int inner_gradient_steps = 8;     // R-block ascent steps per outer iteration
  double gradient_step_size = 1e-3;  // initial R-block step

  bool mu1_k_squared = false;   // shared-mean update: K^2 coefficient variant
  bool scaled_wishart = false;  // diagonal rescaling of the Sigma_k update
  bool use_expression = true;   // false = bulk-only ablation

  // The default k-means start is tried from several angles (raw cells,
  // norm-scaled cells, a reseeded run, random labels); each candidate runs a
  // short pilot and the best pilot objective continues to convergence.
  int n_restarts = 4;
  int pilot_iters = 6;

  std::uint64_t seed = 12345;

  void validate() const {
    if (!(elbo_rel_tol > 0) || max_outer_iters < 1 || z_update_period < 1 ||
        n_restarts < 1 || pilot_iters < 1)
      throw DomainError("FitConfig: tolerances/periods out of range");
  }
};

struct FitReport {
  std::vector<double> elbo_trace;
  bool converged = false;
  int iterations_run = 0;
  int jitter_events = 0;
  int line_search_failures = 0;
  int guard_rejections = 0;  // safeguarded block updates that were damped
  double identifiability_fraction = 0.0;  // share of (j,k) meeting the
                                          // mean-separation condition
  std::vector<std::string> notes;
};

/// Stick-breaking Beta posterior over the K-1 stick fractions.
struct StickPosterior {
  Eigen::VectorXd a;  // 1 + N_k
  Eigen::VectorXd b;  // phi + sum_{k' > k} N_k'

  static StickPosterior from_counts(const Eigen::Ref<const Eigen::VectorXd>& counts,
                                    double phi);
  /// E[ln pi_k] for k = 0..K-1 under the Beta sticks.
  Eigen::VectorXd expected_log_pi() const;
  /// Posterior-mean sticks a / (a + b).
  Eigen::VectorXd mean_sticks() const;
};

/// Which expectation flavor the soft E-step uses. `vb` carries the Wishart
/// dof and stick digamma corrections from the coordinate-ascent derivation;
/// `point` evaluates the same responsibilities at the stored point
/// estimates, which is exactly the posterior e_step_map maximizes.
enum class ExpectationStyle { vb, point };

/// Unnormalized log responsibilities ln(Delta_jk), one row per cell.
/// `counts` supplies the soft cluster sizes for the vb corrections; when
/// absent they are derived from the hard labels in `state`.
Eigen::MatrixXd e_step_log_weights(const Dataset& data, const LatentState& state,
                                   const HyperParams& hp, ExpectationStyle style,
                                   const Eigen::VectorXd* counts = nullptr);

Responsibilities e_step_soft(const Dataset& data, const LatentState& state,
                             const HyperParams& hp,
                             ExpectationStyle style = ExpectationStyle::vb,
                             const Eigen::VectorXd* counts = nullptr);

/// MAP assignment argmax_k ln p(x_j | z=k) + ln pi_k with the cluster
/// factors Cholesky-cached once; ties go to the lowest index.
Eigen::VectorXi e_step_map(const Dataset& data, const LatentState& state,
                           const HyperParams& hp);

// ---------------------------------------------------------------------------
// M-step blocks. Closed forms return the block; iterative blocks mutate the
// state in place and never decrease their block objective.
// ---------------------------------------------------------------------------

/// Posterior-mean stick update v_k = (1+N_k) / (1+phi+N_k+sum_{k'>k} N_k').
Eigen::VectorXd m_step_pi(const Eigen::Ref<const Eigen::VectorXd>& counts, double phi);

void m_step_mu_k(const Dataset& data, const Responsibilities& resp, const HyperParams& hp,
                 LatentState& state);

void m_step_sigma_k(const Dataset& data, const Responsibilities& resp,
                    const HyperParams& hp, LatentState& state, double ridge_eps0,
                    FitReport* report = nullptr);

void m_step_alpha(const Dataset& data, const Responsibilities& resp, const HyperParams& hp,
                  LatentState& state, FitReport* report = nullptr);

void m_step_beta(const Dataset& data, const Responsibilities& resp, const HyperParams& hp,
                 LatentState& state, FitReport* report = nullptr);

/// Gaussian posterior mean for mu'; `k_squared` switches the K^2 coefficient
/// variant in place of the standard K.
Eigen::VectorXd m_step_mu1(const LatentState& state, const HyperParams& hp,
                           bool k_squared = false);

/// Wishart posterior mode for Sigma' (dof d + K); requires K >= 2.
SpdMatrix m_step_sigma1(const LatentState& state, const HyperParams& hp);

void m_step_R(const RegulatoryPrior& prior, const HyperParams& hp, LatentState& state,
              int inner_steps, double step_size, FitReport* report = nullptr);

void m_step_p(const Dataset& data, const RegulatoryPrior& prior, const HyperParams& hp,
              LatentState& state);

// ---------------------------------------------------------------------------
// Block objectives and analytic gradients, exposed for the finite-difference
// harness. Each is the exact restriction of the fit objective to its block.
// ---------------------------------------------------------------------------

double r_block_objective(const Eigen::Ref<const Eigen::MatrixXd>& Rk,
                         const SpdMatrix& Sigma_k,
                         const Eigen::Ref<const Eigen::VectorXd>& pk,
                         const RegulatoryPrior& prior, const HyperParams& hp);

Eigen::MatrixXd r_block_gradient(const Eigen::Ref<const Eigen::MatrixXd>& Rk,
                                 const SpdMatrix& Sigma_k,
                                 const Eigen::Ref<const Eigen::VectorXd>& pk,
                                 const RegulatoryPrior& prior, const HyperParams& hp);

double p_block_objective(const Eigen::Ref<const Eigen::MatrixXd>& p,
                         const LatentState& state, const Dataset& data,
                         const RegulatoryPrior& prior, const HyperParams& hp);

Eigen::MatrixXd p_block_gradient(const Eigen::Ref<const Eigen::MatrixXd>& p,
                                 const LatentState& state, const Dataset& data,
                                 const RegulatoryPrior& prior, const HyperParams& hp);

/// 1-D objectives in t = ln alpha_j / u = ln beta_j for one cell.
struct CellScalingTerms {
  double quad = 0.0;   // sum_k r_jk mu_k' Sigma_k^{-1} mu_k
  double cross = 0.0;  // sum_k r_jk x_j' Sigma_k^{-1} mu_k
  double resid = 0.0;  // sum_k r_jk (x_j - a mu_k)' Sigma_k^{-1} (x_j - a mu_k)
};

double alpha_objective(double log_alpha, const CellScalingTerms& terms, double beta,
                       const HyperParams& hp);
double beta_objective(double log_beta, const CellScalingTerms& terms, int d,
                      const HyperParams& hp);

/// Analytic derivatives of the 1-D objectives, as used by the safeguarded
/// Newton updates.
double alpha_objective_grad(double log_alpha, const CellScalingTerms& terms, double beta,
                            const HyperParams& hp);
double beta_objective_grad(double log_beta, const CellScalingTerms& terms, int d,
                           const HyperParams& hp);

/// Per-cell quadratic terms against the current state (for tests and the
/// scaling updates).
CellScalingTerms cell_scaling_terms(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& resp_row,
                                    const LatentState& state, double alpha_for_resid);

/// The quantity the engine maximizes: E_r[log joint] + H(r), with the
/// cell-scaling priors in log parametrization and the z factors softened by
/// the responsibilities. Every M-step block is a coordinate ascent move on
/// this function, so its trace is non-decreasing.
double fit_objective(const LatentState& state, const Responsibilities& resp,
                     const Dataset& data, const RegulatoryPrior& prior,
                     const HyperParams& hp, bool use_expression = true);

struct FitResult {
  LatentState state;
  Responsibilities resp;
  FitReport report;
};

/// Variational EM driver: k-means (or provided) initialization, soft E-step
/// each iteration with periodic hard z refreshes, M-steps in a fixed
/// order, stopping on relative objective change.
FitResult fit(const Dataset& data, const RegulatoryPrior& prior, const HyperParams& hp,
              const FitConfig& cfg);

}  // namespace symphony
