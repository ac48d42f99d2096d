#include "symphony/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "symphony/evaluation.hpp"
#include "symphony/rng.hpp"

namespace symphony {

namespace {

Eigen::VectorXd counts_from_labels(const Eigen::VectorXi& z, int K) {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(K);
  for (Eigen::Index j = 0; j < z.size(); ++j) n[z[j]] += 1.0;
  return n;
}

/// Generic safeguarded 1-D Newton ascent. Only accepts height-improving
/// moves; returns the start point (and flags failure) when no progress is
/// possible.
template <typename F, typename G1, typename G2>
double maximize_1d(double t0, F&& g, G1&& g1, G2&& g2, bool* failed) {
  double t = t0;
  const double f0 = g(t0);
  double fbest = f0;
  for (int it = 0; it < 100; ++it) {
    const double d1 = g1(t);
    if (std::abs(d1) < 1e-12 * std::max(1.0, std::abs(t))) break;
    const double d2 = g2(t);
    double step = d2 < -1e-300 ? -d1 / d2 : (d1 > 0 ? 0.5 : -0.5);
    step = std::clamp(step, -5.0, 5.0);
    double fnew = g(t + step);
    int halvings = 0;
    while (!(fnew >= fbest) && halvings < 60) {
      step *= 0.5;
      fnew = g(t + step);
      ++halvings;
    }
    if (!(fnew >= fbest)) break;
    if (fnew - fbest < 1e-15 * std::max(1.0, std::abs(fbest)) && it > 0) {
      t += step;
      fbest = fnew;
      break;
    }
    t += step;
    fbest = fnew;
  }
  if (failed) *failed = !(fbest >= f0) || !std::isfinite(fbest);
  return (fbest >= f0 && std::isfinite(t)) ? t : t0;
}

}  // namespace

StickPosterior StickPosterior::from_counts(const Eigen::Ref<const Eigen::VectorXd>& counts,
                                           double phi) {
  const int K = static_cast<int>(counts.size());
  StickPosterior sp;
  sp.a.resize(std::max(K - 1, 0));
  sp.b.resize(std::max(K - 1, 0));
  double tail = 0.0;
  for (int k = K - 1; k >= 1; --k) tail += counts[k];
  // tail now holds sum_{k' > 0}; walk forward maintaining it.
  for (int k = 0; k + 1 < K; ++k) {
    sp.a[k] = 1.0 + counts[k];
    sp.b[k] = phi + tail - 0.0;
    tail -= (k + 1 < K) ? counts[k + 1] : 0.0;
  }
  return sp;
}

Eigen::VectorXd StickPosterior::expected_log_pi() const {
  const int K = static_cast<int>(a.size()) + 1;
  Eigen::VectorXd elp(K);
  double acc = 0.0;  // sum of E[ln(1 - v_i)] for i < k
  for (int k = 0; k < K; ++k) {
    if (k < K - 1) {
      elp[k] = acc + digamma(a[k]) - digamma(a[k] + b[k]);
      acc += digamma(b[k]) - digamma(a[k] + b[k]);
    } else {
      elp[k] = acc;
    }
  }
  return elp;
}

Eigen::VectorXd StickPosterior::mean_sticks() const {
  return a.array() / (a.array() + b.array());
}

// ---------------------------------------------------------------------------
// E-step
// ---------------------------------------------------------------------------

Eigen::MatrixXd e_step_log_weights(const Dataset& data, const LatentState& state,
                                   const HyperParams& hp, ExpectationStyle style,
                                   const Eigen::VectorXd* counts) {
  const int n = data.n();
  const int d = data.d();
  const int K = static_cast<int>(state.pi.size());
  Eigen::MatrixXd logw(n, K);

  Eigen::VectorXd N;
  if (style == ExpectationStyle::vb)
    N = counts ? *counts : counts_from_labels(state.z, K);

  Eigen::VectorXd det_term(K);     // per-cluster log-determinant part
  Eigen::VectorXd trace_term(K);   // tr(Sigma_k^{-1} Sigma''^{-1})
  Eigen::VectorXd log_pi_term(K);  // S3 (vb) or ln pi (point)

  Eigen::MatrixXd Sigma2_inv;
  if (style == ExpectationStyle::vb) {
    Sigma2_inv = hp.Sigma2.inverse();
    const StickPosterior sp = StickPosterior::from_counts(N, hp.phi);
    log_pi_term = sp.expected_log_pi();
  } else {
    for (int k = 0; k < K; ++k)
      log_pi_term[k] = std::log(std::max(state.pi[k], 1e-300));
  }

  for (int k = 0; k < K; ++k) {
    if (style == ExpectationStyle::vb) {
      // E[ln |Sigma_k^{-1}|] under the Wishart with posterior dof
      // gamma_k = gamma + N_k, anchored at the stored point estimate
      // (which is the posterior mode (R* + scatter)/(gamma_k - d - 1)).
      const double gamma_k = hp.gamma + N[k];
      double psi_sum = 0.0;
      for (int i = 1; i <= d; ++i) psi_sum += digamma(0.5 * (gamma_k + 1 - i));
      const double mode_scale = std::max(gamma_k - d - 1.0, 1e-12);
      det_term[k] = psi_sum + d * std::log(2.0) - d * std::log(mode_scale) -
                    state.Sigma[k].log_det();
      trace_term[k] = state.Sigma[k].solve(Sigma2_inv).trace();
    } else {
      det_term[k] = -state.Sigma[k].log_det();
      trace_term[k] = 0.0;
    }
  }

  for (int j = 0; j < n; ++j) {
    const double beta_j = state.beta[j];
    const double log_beta = std::log(beta_j);
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd resid = data.X.col(j) - state.alpha[j] * state.mu.col(k);
      const double quad = state.Sigma[k].inv_quad_form(resid) / beta_j;
      const double s1 = 0.5 * (-d * log_beta + det_term[k]);
      const double s2 = 0.5 * (trace_term[k] / beta_j + quad);
      logw(j, k) = -0.5 * d * kLogTwoPi + s1 - s2 + log_pi_term[k];
    }
  }
  return logw;
}

Responsibilities e_step_soft(const Dataset& data, const LatentState& state,
                             const HyperParams& hp, ExpectationStyle style,
                             const Eigen::VectorXd* counts) {
  return Responsibilities::from_log_weights(
      e_step_log_weights(data, state, hp, style, counts));
}

Eigen::VectorXi e_step_map(const Dataset& data, const LatentState& state,
                           const HyperParams& hp) {
  (void)hp;
  const int n = data.n();
  const int K = static_cast<int>(state.pi.size());
  Eigen::VectorXi z(n);
  Eigen::VectorXd log_pi(K);
  for (int k = 0; k < K; ++k) log_pi[k] = std::log(std::max(state.pi[k], 1e-300));
  for (int j = 0; j < n; ++j) {
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const double val =
          log_pi[k] +
          log_lik_expression(data.X.col(j), state.alpha[j], state.beta[j], k, state);
      if (val > best_val) {  // strict: ties keep the lowest index
        best_val = val;
        best = k;
      }
    }
    z[j] = best;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Closed-form M-steps
// ---------------------------------------------------------------------------

Eigen::VectorXd m_step_pi(const Eigen::Ref<const Eigen::VectorXd>& counts, double phi) {
  const int K = static_cast<int>(counts.size());
  if ((counts.array() < -1e-9).any()) throw DomainError("m_step_pi: negative counts");
  if (K == 1) return Eigen::VectorXd::Ones(1);
  const StickPosterior sp = StickPosterior::from_counts(counts, phi);
  Eigen::VectorXd v = sp.mean_sticks();
  for (Eigen::Index k = 0; k < v.size(); ++k)
    v[k] = std::clamp(v[k], 1e-12, 1.0 - 1e-12);
  return stick_break(v);
}

void m_step_mu_k(const Dataset& data, const Responsibilities& resp, const HyperParams& hp,
                 LatentState& state) {
  (void)hp;
  const int K = static_cast<int>(state.pi.size());
  const int d = data.d();
  const int n = data.n();
  const Eigen::MatrixXd Sigma1_inv = state.Sigma1.inverse();
  const Eigen::VectorXd prior_rhs = Sigma1_inv * state.mu1;
  for (int k = 0; k < K; ++k) {
    double w2 = 0.0;
    Eigen::VectorXd xw = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < n; ++j) {
      const double r = resp.matrix()(j, k);
      if (r <= 0.0) continue;
      const double a = state.alpha[j];
      const double b = state.beta[j];
      w2 += r * a * a / b;
      xw += (r * a / b) * data.X.col(j);
    }
    const Eigen::MatrixXd Sigma_inv = state.Sigma[k].inverse();
    const Eigen::MatrixXd A = w2 * Sigma_inv + Sigma1_inv;
    const Eigen::VectorXd rhs = Sigma_inv * xw + prior_rhs;
    state.mu.col(k) = A.ldlt().solve(rhs);
  }
}

void m_step_sigma_k(const Dataset& data, const Responsibilities& resp,
                    const HyperParams& hp, LatentState& state, double ridge_eps0,
                    FitReport* report) {
  const int K = static_cast<int>(state.pi.size());
  const int d = data.d();
  const int n = data.n();
  const Eigen::VectorXd N = resp.counts();
  for (int k = 0; k < K; ++k) {
    const double dof_post = hp.gamma + N[k];
    if (dof_post <= d + 1.0)
      throw DofTooSmall("m_step_sigma_k: gamma + N_k must exceed d + 1");
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < n; ++j) {
      const double r = resp.matrix()(j, k);
      if (r <= 0.0) continue;
      const Eigen::VectorXd resid = data.X.col(j) - state.alpha[j] * state.mu.col(k);
      scatter.noalias() += (r / state.beta[j]) * (resid * resid.transpose());
    }
    const SpdMatrix Rstar = grn_square(state.R[k]);
    Eigen::MatrixXd Sig = (Rstar.matrix() + scatter) / (dof_post - d - 1.0);
    Sig = 0.5 * (Sig + Sig.transpose());
    const double eps0 = std::max(ridge_eps0 * Sig.trace() / d, 1e-12);
    const JitterResult jr = jitter_to_psd(Sig, eps0);
    if (report && (jr.epsilon > 0.0 || Rstar.applied_jitter() > 0.0))
      ++report->jitter_events;
    state.Sigma[k] = jr.matrix;
  }
}

CellScalingTerms cell_scaling_terms(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& resp_row,
                                    const LatentState& state, double alpha_for_resid) {
  CellScalingTerms t;
  const int K = static_cast<int>(state.pi.size());
  for (int k = 0; k < K; ++k) {
    const double r = resp_row[k];
    if (r <= 0.0) continue;
    const Eigen::VectorXd sv = state.Sigma[k].solve(state.mu.col(k));
    t.quad += r * state.mu.col(k).dot(sv);
    t.cross += r * x.dot(sv);
    const Eigen::VectorXd resid = x - alpha_for_resid * state.mu.col(k);
    t.resid += r * state.Sigma[k].inv_quad_form(resid);
  }
  return t;
}

double alpha_objective(double log_alpha, const CellScalingTerms& terms, double beta,
                       const HyperParams& hp) {
  const double a = std::exp(log_alpha);
  const double data_term = -(terms.quad * a * a - 2.0 * terms.cross * a) / (2.0 * beta);
  const double zn = (log_alpha - hp.nu) / hp.delta;
  return data_term - 0.5 * zn * zn;
}

double beta_objective(double log_beta, const CellScalingTerms& terms, int d,
                      const HyperParams& hp) {
  const double zn = (log_beta - hp.omega) / hp.theta;
  return -0.5 * d * log_beta - 0.5 * terms.resid * std::exp(-log_beta) - 0.5 * zn * zn;
}

double alpha_objective_grad(double log_alpha, const CellScalingTerms& terms, double beta,
                            const HyperParams& hp) {
  const double a = std::exp(log_alpha);
  return -(terms.quad * a * a - terms.cross * a) / beta -
         (log_alpha - hp.nu) / (hp.delta * hp.delta);
}

double beta_objective_grad(double log_beta, const CellScalingTerms& terms, int d,
                           const HyperParams& hp) {
  return -0.5 * d + 0.5 * terms.resid * std::exp(-log_beta) -
         (log_beta - hp.omega) / (hp.theta * hp.theta);
}

void m_step_alpha(const Dataset& data, const Responsibilities& resp, const HyperParams& hp,
                  LatentState& state, FitReport* report) {
  const int n = data.n();
  const int K = static_cast<int>(state.pi.size());
  // Per-cluster solves reused across cells.
  std::vector<Eigen::VectorXd> sv(K);
  Eigen::VectorXd muq(K);
  for (int k = 0; k < K; ++k) {
    sv[k] = state.Sigma[k].solve(state.mu.col(k));
    muq[k] = state.mu.col(k).dot(sv[k]);
  }
  for (int j = 0; j < n; ++j) {
    CellScalingTerms t;
    for (int k = 0; k < K; ++k) {
      const double r = resp.matrix()(j, k);
      if (r <= 0.0) continue;
      t.quad += r * muq[k];
      t.cross += r * data.X.col(j).dot(sv[k]);
    }
    const double beta_j = state.beta[j];
    const auto g = [&](double lt) { return alpha_objective(lt, t, beta_j, hp); };
    const auto g1 = [&](double lt) { return alpha_objective_grad(lt, t, beta_j, hp); };
    const auto g2 = [&](double lt) {
      const double a = std::exp(lt);
      return -(2.0 * t.quad * a * a - t.cross * a) / beta_j - 1.0 / (hp.delta * hp.delta);
    };
    bool failed = false;
    const double lt = maximize_1d(std::log(state.alpha[j]), g, g1, g2, &failed);
    if (failed && report) ++report->line_search_failures;
    if (!failed) state.alpha[j] = std::exp(std::clamp(lt, -30.0, 30.0));
  }
}

void m_step_beta(const Dataset& data, const Responsibilities& resp, const HyperParams& hp,
                 LatentState& state, FitReport* report) {
  const int n = data.n();
  const int d = data.d();
  for (int j = 0; j < n; ++j) {
    CellScalingTerms t =
        cell_scaling_terms(data.X.col(j), resp.matrix().row(j), state, state.alpha[j]);
    const auto g = [&](double lu) { return beta_objective(lu, t, d, hp); };
    const auto g1 = [&](double lu) { return beta_objective_grad(lu, t, d, hp); };
    const auto g2 = [&](double lu) {
      return -0.5 * t.resid * std::exp(-lu) - 1.0 / (hp.theta * hp.theta);
    };
    bool failed = false;
    const double lu = maximize_1d(std::log(state.beta[j]), g, g1, g2, &failed);
    if (failed && report) ++report->line_search_failures;
    if (!failed) state.beta[j] = std::exp(std::clamp(lu, -30.0, 30.0));
  }
}

Eigen::VectorXd m_step_mu1(const LatentState& state, const HyperParams& hp,
                           bool k_squared) {
  const int K = static_cast<int>(state.pi.size());
  const Eigen::MatrixXd Sigma2_inv = hp.Sigma2.inverse();
  const Eigen::MatrixXd Sigma1_inv = state.Sigma1.inverse();
  const double coeff = k_squared ? static_cast<double>(K) * K : static_cast<double>(K);
  const Eigen::VectorXd mu_bar = state.mu.rowwise().mean();
  const Eigen::MatrixXd A = Sigma2_inv + coeff * Sigma1_inv;
  const Eigen::VectorXd rhs = Sigma2_inv * hp.mu2 + coeff * (Sigma1_inv * mu_bar);
  return A.ldlt().solve(rhs);
}

SpdMatrix m_step_sigma1(const LatentState& state, const HyperParams& hp) {
  const int K = static_cast<int>(state.pi.size());
  const int d = static_cast<int>(state.mu1.size());
  if (K < 2) throw DofTooSmall("m_step_sigma1: needs K >= 2 clusters");
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd c = state.mu.col(k) - state.mu1;
    scatter.noalias() += c * c.transpose();
  }
  Eigen::MatrixXd Sig = (d * hp.Sigma2.matrix() + scatter) / (K - 1.0);
  Sig = 0.5 * (Sig + Sig.transpose());
  return jitter_to_psd(Sig, default_jitter_eps0(Sig)).matrix;
}

// ---------------------------------------------------------------------------
// Gradient blocks
// ---------------------------------------------------------------------------

double r_block_objective(const Eigen::Ref<const Eigen::MatrixXd>& Rk,
                         const SpdMatrix& Sigma_k,
                         const Eigen::Ref<const Eigen::VectorXd>& pk,
                         const RegulatoryPrior& prior, const HyperParams& hp) {
  const SpdMatrix Rstar = grn_square(Rk);
  return log_prior_Sigma_from_cov(Sigma_k, Rstar, hp.gamma) +
         log_prior_R(Rk, pk, prior, hp);
}

Eigen::MatrixXd r_block_gradient(const Eigen::Ref<const Eigen::MatrixXd>& Rk,
                                 const SpdMatrix& Sigma_k,
                                 const Eigen::Ref<const Eigen::VectorXd>& pk,
                                 const RegulatoryPrior& prior, const HyperParams& hp) {
  const Eigen::MatrixXd B = Rk + Rk.transpose();
  const SpdMatrix Rstar = grn_square(Rk);
  // d/dR of -tr(B^2 Sigma^{-1})/2 is -(B Sigma^{-1} + Sigma^{-1} B); the
  // dB = dR + dR^T symmetrization supplies the factor of two.
  const Eigen::MatrixXd SinvB = Sigma_k.solve(B);
  const Eigen::MatrixXd trace_grad = -(SinvB + SinvB.transpose());
  const Eigen::MatrixXd logdet_grad = 2.0 * hp.gamma * Rstar.solve(B);
  const Eigen::MatrixXd T = prior.edge_mean(pk);
  return trace_grad + logdet_grad - (Rk - T) / hp.lambda;
}

void m_step_R(const RegulatoryPrior& prior, const HyperParams& hp, LatentState& state,
              int inner_steps, double step_size, FitReport* report) {
  const int K = static_cast<int>(state.pi.size());
  for (int k = 0; k < K; ++k) {
    double eta = step_size;
    Eigen::MatrixXd R = state.R[k];
    double f = r_block_objective(R, state.Sigma[k], state.p.row(k), prior, hp);
    for (int step = 0; step < inner_steps; ++step) {
      const Eigen::MatrixXd G =
          r_block_gradient(R, state.Sigma[k], state.p.row(k), prior, hp);
      bool accepted = false;
      for (int halving = 0; halving < 40; ++halving) {
        const Eigen::MatrixXd cand = R + eta * G;
        const double fc =
            r_block_objective(cand, state.Sigma[k], state.p.row(k), prior, hp);
        if (std::isfinite(fc) && fc >= f) {
          R = cand;
          f = fc;
          eta *= 1.5;
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) {
        if (report) ++report->line_search_failures;
        break;
      }
    }
    state.R[k] = R;
  }
}

double p_block_objective(const Eigen::Ref<const Eigen::MatrixXd>& p,
                         const LatentState& state, const Dataset& data,
                         const RegulatoryPrior& prior, const HyperParams& hp) {
  LatentState tmp = state;
  tmp.p = p;
  double obj = 0.0;
  for (int t = 0; t < data.r(); ++t) obj += log_lik_bulk(data.C.col(t), tmp, hp);
  const int K = static_cast<int>(state.pi.size());
  for (int k = 0; k < K; ++k) {
    obj += log_prior_p(p.row(k), hp);
    obj += log_prior_R(state.R[k], p.row(k), prior, hp);
  }
  return obj;
}

Eigen::MatrixXd p_block_gradient(const Eigen::Ref<const Eigen::MatrixXd>& p,
                                 const LatentState& state, const Dataset& data,
                                 const RegulatoryPrior& prior, const HyperParams& hp) {
  const int K = static_cast<int>(p.rows());
  const int l = static_cast<int>(p.cols());
  const int d = data.d();
  const double r = data.r();
  const Eigen::VectorXd cbar = data.C.rowwise().mean();
  const Eigen::VectorXd mix = p.transpose() * state.pi;
  Eigen::MatrixXd grad(K, l);
  for (int k = 0; k < K; ++k)
    grad.row(k) = (r * state.pi[k] / hp.zeta) * (cbar - mix).transpose();
  for (int k = 0; k < K; ++k)
    grad.row(k) -=
        ((p.row(k).transpose() - hp.eta).array() / hp.Lambda_diag.array()).matrix().transpose();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (prior.M(i, j) != 1) continue;
      const int m = prior.mapping(i, j);
      const double s = prior.S(i, j);
      for (int k = 0; k < K; ++k)
        grad(k, m) += s * (state.R[k](i, j) - s * p(k, m)) / hp.lambda;
    }
  return grad;
}

void m_step_p(const Dataset& data, const RegulatoryPrior& prior, const HyperParams& hp,
              LatentState& state) {
  const int K = static_cast<int>(state.pi.size());
  const int l = static_cast<int>(state.p.cols());
  const int d = data.d();
  const double r = data.r();
  const Eigen::VectorXd cbar = data.C.rowwise().mean();

  // Per-region coupling statistics shared across clusters.
  Eigen::VectorXd cnt = Eigen::VectorXd::Zero(l);
  Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(K, l);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (prior.M(i, j) != 1) continue;
      const int m = prior.mapping(i, j);
      const double s = prior.S(i, j);
      cnt[m] += s * s;
      for (int k = 0; k < K; ++k) lin(k, m) += s * state.R[k](i, j);
    }

  const Eigen::VectorXd& pi = state.pi;
  const Eigen::MatrixXd bulk_H = (r / hp.zeta) * (pi * pi.transpose());
  for (int m = 0; m < l; ++m) {
    Eigen::MatrixXd H = bulk_H;
    H.diagonal().array() += 1.0 / hp.Lambda_diag[m] + cnt[m] / hp.lambda;
    Eigen::VectorXd b = (r / hp.zeta) * cbar[m] * pi;
    b.array() += hp.eta[m] / hp.Lambda_diag[m];
    b += lin.col(m) / hp.lambda;

    Eigen::VectorXd w = H.ldlt().solve(b);
    if ((w.array() >= 0.0).all()) {
      state.p.col(m) = w;
      continue;
    }
    // Clamped Gauss-Seidel from the current profile column.
    w = state.p.col(m);
    for (int sweep = 0; sweep < 500; ++sweep) {
      double max_change = 0.0;
      for (int k = 0; k < K; ++k) {
        const double off = H.row(k).dot(w) - H(k, k) * w[k];
        const double cand = std::max(0.0, (b[k] - off) / H(k, k));
        max_change = std::max(max_change, std::abs(cand - w[k]));
        w[k] = cand;
      }
      if (max_change < 1e-13) break;
    }
    state.p.col(m) = w;
  }
}

// ---------------------------------------------------------------------------
// Fit objective
// ---------------------------------------------------------------------------

double fit_objective(const LatentState& state, const Responsibilities& resp,
                     const Dataset& data, const RegulatoryPrior& prior,
                     const HyperParams& hp, bool use_expression) {
  const JointFactors f = log_joint_factors(state, data, prior, hp, true);
  double obj = f.total() - f.expression - f.z_prior;
  if (!use_expression) return obj;

  const int n = data.n();
  const int K = static_cast<int>(state.pi.size());
  Eigen::VectorXd log_pi(K);
  for (int k = 0; k < K; ++k) log_pi[k] = std::log(std::max(state.pi[k], 1e-300));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < K; ++k) {
      const double rjk = resp.matrix()(j, k);
      if (rjk <= 0.0) continue;
      obj += rjk * (log_pi[k] + log_lik_expression(data.X.col(j), state.alpha[j],
                                                   state.beta[j], k, state));
    }
  obj += resp.entropy();
  return obj;
}

// ---------------------------------------------------------------------------
// Fit driver
// ---------------------------------------------------------------------------

namespace {

/// pi-dependent slice of the fit objective (soft assignment term, stick
/// prior, bulk likelihood).
double pi_block_objective(const Eigen::VectorXd& pi, const Eigen::VectorXd& counts,
                          const LatentState& state, const Dataset& data,
                          const HyperParams& hp, bool use_expression) {
  double obj = log_prior_pi(pi, hp.phi);
  if (use_expression)
    for (Eigen::Index k = 0; k < pi.size(); ++k)
      obj += counts[k] * std::log(std::max(pi[k], 1e-300));
  const Eigen::VectorXd mix = state.p.transpose() * pi;
  for (int t = 0; t < data.r(); ++t)
    obj += -0.5 * (data.C.col(t) - mix).squaredNorm() / hp.zeta;
  return obj;
}

/// Optional scaled-Wishart refinement: a diagonal rescaling of each
/// Sigma_k climbing the covariance block objective, finite-difference
/// gradients with backtracking.
void scale_sigma_diag(const Dataset& data, const Responsibilities& resp,
                      const HyperParams& hp, LatentState& state,
                      const RegulatoryPrior& prior, FitReport* report) {
  (void)prior;
  const int K = static_cast<int>(state.pi.size());
  const int d = data.d();
  const int n = data.n();
  for (int k = 0; k < K; ++k) {
    const Eigen::MatrixXd base = state.Sigma[k].matrix();
    const SpdMatrix Rstar = grn_square(state.R[k]);
    const auto block = [&](const Eigen::VectorXd& log_s) -> double {
      const Eigen::VectorXd s = log_s.array().exp().sqrt();
      Eigen::MatrixXd Sig = s.asDiagonal() * base * s.asDiagonal();
      Sig = 0.5 * (Sig + Sig.transpose());
      SpdMatrix cand;
      try {
        cand = jitter_to_psd(Sig, default_jitter_eps0(Sig)).matrix;
      } catch (const NumericalError&) {
        return -std::numeric_limits<double>::infinity();
      }
      double obj = log_prior_Sigma_from_cov(cand, Rstar, hp.gamma);
      for (int j = 0; j < n; ++j) {
        const double rjk = resp.matrix()(j, k);
        if (rjk <= 0.0) continue;
        const Eigen::VectorXd resid = data.X.col(j) - state.alpha[j] * state.mu.col(k);
        obj += rjk * (-0.5 * (d * (kLogTwoPi + std::log(state.beta[j])) +
                              cand.log_det() +
                              cand.inv_quad_form(resid) / state.beta[j]));
      }
      return obj;
    };
    Eigen::VectorXd log_s = Eigen::VectorXd::Zero(d);
    double f = block(log_s);
    for (int step = 0; step < 2; ++step) {
      Eigen::VectorXd grad(d);
      const double h = 1e-5;
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd lp = log_s, lm = log_s;
        lp[i] += h;
        lm[i] -= h;
        grad[i] = (block(lp) - block(lm)) / (2.0 * h);
      }
      double eta = 1e-2;
      bool accepted = false;
      for (int halving = 0; halving < 20; ++halving) {
        const Eigen::VectorXd cand = log_s + eta * grad;
        const double fc = block(cand);
        if (std::isfinite(fc) && fc >= f) {
          log_s = cand;
          f = fc;
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) {
        if (report) ++report->line_search_failures;
        break;
      }
    }
    const Eigen::VectorXd s = log_s.array().exp().sqrt();
    Eigen::MatrixXd Sig = s.asDiagonal() * base * s.asDiagonal();
    Sig = 0.5 * (Sig + Sig.transpose());
    state.Sigma[k] = jitter_to_psd(Sig, default_jitter_eps0(Sig)).matrix;
  }
}

/// One guarded gradient step on the relaxed motif indicator; the working
/// prior's sign matrix absorbs the relaxation as S .* Mtilde.
void learn_m_step(const Dataset& data, const RegulatoryPrior& prior,
                  const HyperParams& hp, const LatentState& state,
                  Eigen::MatrixXd& Mtilde, double relax_var,
                  RegulatoryPrior& work_prior, FitReport* report) {
  (void)data;
  const int d = static_cast<int>(Mtilde.rows());
  const int K = static_cast<int>(state.pi.size());
  const auto objective = [&](const Eigen::MatrixXd& Mt) -> double {
    double obj = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (prior.M(i, j) != 1) continue;
        const int m = prior.mapping(i, j);
        const double s = prior.S(i, j);
        for (int k = 0; k < K; ++k) {
          const double diff = state.R[k](i, j) - s * Mt(i, j) * state.p(k, m);
          obj -= diff * diff / (2.0 * hp.lambda);
        }
        const double pen = Mt(i, j) - prior.M(i, j);
        obj -= pen * pen / (2.0 * relax_var);
      }
    return obj;
  };
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (prior.M(i, j) != 1) continue;
      const int m = prior.mapping(i, j);
      const double s = prior.S(i, j);
      for (int k = 0; k < K; ++k)
        grad(i, j) += s * state.p(k, m) *
                      (state.R[k](i, j) - s * Mtilde(i, j) * state.p(k, m)) / hp.lambda;
      grad(i, j) -= (Mtilde(i, j) - prior.M(i, j)) / relax_var;
    }
  const double f0 = objective(Mtilde);
  double eta = relax_var;  // natural scale of the tight relaxation
  bool accepted = false;
  for (int halving = 0; halving < 20; ++halving) {
    const Eigen::MatrixXd cand = Mtilde + eta * grad;
    if (objective(cand) >= f0) {
      Mtilde = cand;
      accepted = true;
      break;
    }
    eta *= 0.5;
  }
  if (!accepted && report) ++report->line_search_failures;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (prior.M(i, j) == 1) work_prior.S(i, j) = prior.S(i, j) * Mtilde(i, j);
}

LatentState initialize_state(const Dataset& data, const RegulatoryPrior& prior,
                             const HyperParams& hp, const FitConfig& cfg, int K,
                             Eigen::VectorXi labels) {
  const int n = data.n();
  const int d = data.d();
  const int l = data.l();
  LatentState st;
  st.z = labels;
  const Eigen::VectorXd counts = counts_from_labels(labels, K);
  st.pi = cfg.fixed_pi ? *cfg.fixed_pi : m_step_pi(counts, hp.phi);

  st.p.resize(K, l);
  const Eigen::VectorXd cbar = data.C.rowwise().mean().cwiseMax(0.0);
  for (int k = 0; k < K; ++k) st.p.row(k) = cbar.transpose();

  st.R.resize(K);
  st.Sigma.resize(K);
  for (int k = 0; k < K; ++k) {
    st.R[k] = prior.edge_mean(st.p.row(k));
    const SpdMatrix Rstar = grn_square(st.R[k]);
    Eigen::MatrixXd Sig = Rstar.matrix() / std::max(hp.gamma - d - 1.0, 1.0);
    st.Sigma[k] = jitter_to_psd(Sig, default_jitter_eps0(Sig)).matrix;
  }

  const Eigen::VectorXd global_mean = data.X.rowwise().mean();
  st.mu.resize(d, K);
  for (int k = 0; k < K; ++k) {
    if (counts[k] > 0.5) {
      Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
      for (int j = 0; j < n; ++j)
        if (labels[j] == k) m += data.X.col(j);
      st.mu.col(k) = m / counts[k];
    } else {
      st.mu.col(k) = global_mean;
    }
  }
  st.mu1 = st.mu.rowwise().mean();
  st.Sigma1 = hp.Sigma2;
  st.alpha = Eigen::VectorXd::Ones(n);
  st.beta = Eigen::VectorXd::Ones(n);
  return st;
}

}  // namespace

FitResult fit(const Dataset& data, const RegulatoryPrior& prior, const HyperParams& hp,
              const FitConfig& cfg) {
  cfg.validate();
  data.validate();
  const int n = data.n();
  const int d = data.d();
  Dims dims{n, d, data.l(), data.r(), 0};

  // K comes from the config, the fixed labels, or the explicit init.
  int K = cfg.K;
  if (cfg.fixed_pi)
    K = std::max(K, static_cast<int>(cfg.fixed_pi->size()));
  if (cfg.fixed_z)
    K = std::max(K, cfg.fixed_z->maxCoeff() + 1);
  if (cfg.init == FitConfig::Init::provided && cfg.init_labels.size() > 0)
    K = std::max(K, cfg.init_labels.maxCoeff() + 1);
  if (K == 0) K = 3;
  dims.K = K;
  dims.validate();
  hp.validate(dims);
  prior.validate(dims);

  // Candidate initial labelings. Restarts only apply to the default
  // k-means path; explicit inits are honored verbatim.
  std::vector<Eigen::VectorXi> init_sets;
  if (cfg.fixed_z) {
    init_sets.push_back(*cfg.fixed_z);
  } else if (cfg.init == FitConfig::Init::provided) {
    init_sets.push_back(cfg.init_labels);
  } else if (cfg.init == FitConfig::Init::random) {
    RngStream rng(cfg.seed, 101);
    Eigen::VectorXi labels(n);
    for (int j = 0; j < n; ++j)
      labels[j] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(K));
    init_sets.push_back(labels);
  } else {
    init_sets.push_back(baseline_kmeans(data.X, K, cfg.seed));
    const bool restartable = cfg.use_expression && !cfg.learn_M && K > 1;
    if (restartable && cfg.n_restarts > 1) {
      // per-cell norm scaling cancels the alpha stretch before clustering
      Eigen::MatrixXd Xn = data.X;
      for (int j = 0; j < n; ++j) {
        const double norm = Xn.col(j).norm();
        if (norm > 0.0) Xn.col(j) /= norm;
      }
      init_sets.push_back(baseline_kmeans(Xn, K, cfg.seed ^ 0x5bd1e995ULL));
    }
    if (restartable && cfg.n_restarts > 2)
      init_sets.push_back(baseline_kmeans(data.X, K, cfg.seed * 31 + 7));
    if (restartable && cfg.n_restarts > 3) {
      RngStream rng(cfg.seed, 404);
      Eigen::VectorXi labels(n);
      for (int j = 0; j < n; ++j)
        labels[j] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(K));
      init_sets.push_back(labels);
    }
    while (static_cast<int>(init_sets.size()) > cfg.n_restarts) init_sets.pop_back();
  }
  for (const auto& labels : init_sets)
    if (labels.size() != n) throw DimensionMismatch("fit: init labels length != n");

  FitResult out;
  FitReport& rep = out.report;
  rep.notes.push_back("sigma1 update uses the cluster-mean scatter statistic");
  if (cfg.mu1_k_squared) rep.notes.push_back("mu1 update running the K^2 coefficient variant");
  if (K < 2) rep.notes.push_back("sigma1 update skipped: needs K >= 2");
  if (!cfg.use_expression) rep.notes.push_back("expression view disabled (bulk-only ablation)");

  RegulatoryPrior work_prior = prior;
  Eigen::MatrixXd Mtilde;
  if (cfg.learn_M) {
    Mtilde = prior.M.cast<double>();
    rep.notes.push_back("learn_M: motif indicator relaxed to a Gaussian around M");
  }
  const double m_relax_var = 1e-4;
  const auto m_penalty = [&]() {
    if (!cfg.learn_M) return 0.0;
    double pen = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (prior.M(i, j) == 1) {
          const double diff = Mtilde(i, j) - prior.M(i, j);
          pen += diff * diff;
        }
    return -pen / (2.0 * m_relax_var);
  };

  struct EmRun {
    LatentState st;
    Responsibilities resp;
    std::vector<double> trace;
    double f_prev = 0.0;
    LatentState snap_st;
    Responsibilities snap_resp;
    int iters = 0;
    bool stopped = false;
    bool converged = false;
    bool saturated = false;
  };

  const auto make_run = [&](const Eigen::VectorXi& labels) {
    EmRun run;
    run.st = initialize_state(data, prior, hp, cfg, K, labels);
    run.resp = Responsibilities::from_labels(labels, K);
    run.f_prev = fit_objective(run.st, run.resp, data, work_prior, hp,
                               cfg.use_expression) +
                 m_penalty();
    run.snap_st = run.st;
    run.snap_resp = run.resp;
    return run;
  };

  // One outer iteration: E-step, then the M-step blocks in a fixed order.
  // Every block either maximizes its slice of the objective exactly or is
  // line-search guarded, so the recorded trace never decreases.
  const auto step = [&](EmRun& run) {
    if (run.stopped) return;
    const int iter = ++run.iters;
    LatentState& st = run.st;
    Responsibilities& resp = run.resp;

    // E-step at the stored point estimates: the exact coordinate-ascent
    // move for the soft assignments.
    if (cfg.use_expression) {
      if (cfg.fixed_z) {
        resp = Responsibilities::from_labels(*cfg.fixed_z, K);
      } else if (cfg.e_step_mode == FitConfig::EStepMode::map) {
        resp = Responsibilities::from_labels(e_step_map(data, st, hp), K);
      } else {
        resp = e_step_soft(data, st, hp, ExpectationStyle::point);
      }
      if (iter == 1 || iter % cfg.z_update_period == 0)
        st.z = cfg.fixed_z ? *cfg.fixed_z : e_step_map(data, st, hp);
    }
    const Eigen::VectorXd counts = resp.counts();

    // Mixture weights, guarded against the bulk coupling the stick
    // posterior ignores.
    if (!cfg.fixed_pi && K > 1) {
      const Eigen::VectorXd cand = m_step_pi(counts, hp.phi);
      const double g_old =
          pi_block_objective(st.pi, counts, st, data, hp, cfg.use_expression);
      const Eigen::VectorXd v_old = sticks_from_simplex(st.pi);
      const Eigen::VectorXd v_new = sticks_from_simplex(cand);
      bool accepted = false;
      for (double s : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
        Eigen::VectorXd v = (1.0 - s) * v_old + s * v_new;
        for (Eigen::Index kk = 0; kk < v.size(); ++kk)
          v[kk] = std::clamp(v[kk], 1e-12, 1.0 - 1e-12);
        const Eigen::VectorXd pi_s = stick_break(v);
        if (pi_block_objective(pi_s, counts, st, data, hp, cfg.use_expression) >=
            g_old) {
          st.pi = pi_s;
          accepted = true;
          break;
        }
      }
      if (!accepted) ++rep.guard_rejections;
    }

    if (cfg.use_expression) {
      // Cluster means and covariances.
      m_step_mu_k(data, resp, hp, st);
      m_step_sigma_k(data, resp, hp, st, cfg.ridge_eps0, &rep);
      if (cfg.scaled_wishart) scale_sigma_diag(data, resp, hp, st, work_prior, &rep);

      // Cell scalings.
      m_step_alpha(data, resp, hp, st, &rep);
      m_step_beta(data, resp, hp, st, &rep);

      // Mean hierarchy.
      {
        const Eigen::VectorXd cand = m_step_mu1(st, hp, cfg.mu1_k_squared);
        if (!cfg.mu1_k_squared) {
          st.mu1 = cand;  // exact maximizer
        } else {
          // The K^2 variant is not the exact ascent direction; damp it.
          const Eigen::VectorXd old = st.mu1;
          const auto mu1_obj = [&](const Eigen::VectorXd& m1) {
            double o = mvn_log_pdf(m1, hp.mu2, hp.Sigma2);
            for (int k = 0; k < K; ++k)
              o += mvn_log_pdf(st.mu.col(k), m1, st.Sigma1);
            return o;
          };
          const double base = mu1_obj(old);
          bool ok = false;
          for (double s : {1.0, 0.5, 0.25, 0.125}) {
            const Eigen::VectorXd m1 = (1.0 - s) * old + s * cand;
            if (mu1_obj(m1) >= base) {
              st.mu1 = m1;
              ok = true;
              break;
            }
          }
          if (!ok) ++rep.guard_rejections;
        }
      }
      if (K >= 2) st.Sigma1 = m_step_sigma1(st, hp);
    }

    // Networks and peak profiles.
    m_step_R(work_prior, hp, st, cfg.inner_gradient_steps, cfg.gradient_step_size,
             &rep);
    m_step_p(data, work_prior, hp, st);

    if (cfg.learn_M)
      learn_m_step(data, prior, hp, st, Mtilde, m_relax_var, work_prior, &rep);

    const double f_now =
        fit_objective(st, resp, data, work_prior, hp, cfg.use_expression) +
        m_penalty();
    if (iter > 1 && f_now < run.f_prev) {
      // Every block ascends, so a measured drop means the ascent has hit
      // numerical saturation; restore the better state and stop.
      run.st = run.snap_st;
      run.resp = run.snap_resp;
      run.converged = true;
      run.saturated = true;
      run.stopped = true;
      return;
    }
    run.trace.push_back(f_now);
    if (iter > 1 &&
        std::abs(f_now - run.f_prev) <= cfg.elbo_rel_tol * (1.0 + std::abs(run.f_prev))) {
      run.converged = true;
      run.stopped = true;
    }
    run.f_prev = f_now;
    run.snap_st = run.st;
    run.snap_resp = run.resp;
  };

  std::vector<EmRun> runs;
  runs.reserve(init_sets.size());
  for (const auto& labels : init_sets) runs.push_back(make_run(labels));

  if (runs.size() > 1) {
    const int pilot = std::min(cfg.pilot_iters, cfg.max_outer_iters);
    for (auto& run : runs)
      for (int i = 0; i < pilot && !run.stopped; ++i) step(run);
    rep.notes.push_back("initialization chosen from " +
                        std::to_string(runs.size()) +
                        " candidate starts by pilot objective");
  }
  size_t best = 0;
  for (size_t i = 1; i < runs.size(); ++i)
    if (runs[i].f_prev > runs[best].f_prev) best = i;
  EmRun& win = runs[best];
  while (win.iters < cfg.max_outer_iters && !win.stopped) step(win);

  if (win.saturated)
    rep.notes.push_back("stopped at numerical saturation of the objective");
  out.state = std::move(win.st);
  Responsibilities resp = std::move(win.resp);
  rep.elbo_trace = std::move(win.trace);
  rep.converged = win.converged;
  rep.iterations_run = win.iters;

  // Final refresh so labels, responsibilities, and diagnostics match the
  // returned state.
  if (cfg.use_expression && !cfg.fixed_z) {
    out.state.z = e_step_map(data, out.state, hp);
    resp = cfg.e_step_mode == FitConfig::EStepMode::map
               ? Responsibilities::from_labels(out.state.z, K)
               : e_step_soft(data, out.state, hp, ExpectationStyle::point);
  } else if (cfg.fixed_z) {
    out.state.z = *cfg.fixed_z;
    resp = Responsibilities::from_labels(*cfg.fixed_z, K);
  }
  out.resp = resp;
  rep.identifiability_fraction =
      check_identifiability_condition(out.state, hp).fraction_ok;
  return out;
}

}  // namespace symphony
