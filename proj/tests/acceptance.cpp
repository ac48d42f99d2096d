// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle_utils.hpp"
#include "symphony/cli.hpp"
#include "symphony/evaluation.hpp"
#include "symphony/inference.hpp"
#include "symphony/io.hpp"
#include "symphony/simulator.hpp"
#include "toy_instances.hpp"

using namespace symphony;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  if (!pass) ++g_failures;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RunOutcome {
  double f_fit = 0.0;
  double f_kmeans = 0.0;
  double rmse_fit = 0.0;
  double rmse_nmf = 0.0;
  double seconds = 0.0;
  double min_trace_delta = 0.0;
  double max_row_sum_err = 0.0;
};

RunOutcome one_synthetic_run(std::uint64_t seed) {
  SimConfig sim = SimConfig::make_default();  // n=100, K=3, d=10, l=50, r=3
  sim.seed = seed;
  const GroundTruth gt = simulate(sim);

  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 3;
  cfg.max_outer_iters = 150;
  cfg.elbo_rel_tol = 1e-8;
  cfg.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
  const auto t1 = std::chrono::steady_clock::now();

  RunOutcome res;
  res.seconds = std::chrono::duration<double>(t1 - t0).count();
  res.f_fit = f_score_clustering(out.state.z, gt.state.z);
  res.f_kmeans =
      f_score_clustering(baseline_kmeans(gt.dataset.X, 3, seed), gt.state.z);
  res.rmse_fit = rmse_peaks(out.state.p, gt.state.p);
  const NmfResult nmf = baseline_nmf_deconvolve(gt.dataset.C, 3, 500, seed);
  res.rmse_nmf = rmse_peaks(nmf.W.transpose(), gt.state.p);

  res.min_trace_delta = 0.0;
  for (size_t i = 1; i < out.report.elbo_trace.size(); ++i)
    res.min_trace_delta = std::min(
        res.min_trace_delta, out.report.elbo_trace[i] - out.report.elbo_trace[i - 1]);
  for (int j = 0; j < gt.dims.n; ++j)
    res.max_row_sum_err = std::max(res.max_row_sum_err,
                                   std::abs(out.resp.matrix().row(j).sum() - 1.0));
  return res;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  std::vector<RunOutcome> runs;
  for (int i = 0; i < 10; ++i) runs.push_back(one_synthetic_run(9001 + i));

  // ---------------------------------------------------------------- 1
  {
    std::vector<double> f_fit, f_km;
    double max_sec = 0.0;
    for (const auto& r : runs) {
      f_fit.push_back(r.f_fit);
      f_km.push_back(r.f_kmeans);
      max_sec = std::max(max_sec, r.seconds);
    }
    const double med_fit = median(f_fit);
    const double med_km = median(f_km);
    const bool pass = med_fit >= 0.9 && med_fit > med_km && max_sec < 60.0;
    report(1, "synthetic clustering recovery beats k-means", pass,
           "median F " + fmt(med_fit) + " vs k-means " + fmt(med_km) + ", slowest run " +
               fmt(max_sec) + " s");
  }

  // ---------------------------------------------------------------- 2
  {
    std::vector<double> rm_fit, rm_nmf;
    for (const auto& r : runs) {
      rm_fit.push_back(r.rmse_fit);
      rm_nmf.push_back(r.rmse_nmf);
    }
    const double med_fit = median(rm_fit);
    const double med_nmf = median(rm_nmf);

    // K=1 with vanishing bulk noise recovers the profile almost exactly
    SimConfig sim = SimConfig::make_default();
    sim.dims = Dims{50, 6, 30, 3, 1};
    sim.hp = HyperParams::defaults(sim.dims);
    sim.hp.mu2 = Eigen::VectorXd::Zero(6);
    sim.hp.Sigma2 = SpdMatrix::from_psd(25.0 * Eigen::MatrixXd::Identity(6, 6));
    sim.noise_free_bulk = true;
    sim.seed = 404;
    const GroundTruth gt = simulate(sim);
    HyperParams hp = gt.hp;
    hp.set_empirical(gt.dataset);
    hp.zeta = 1e-9;
    FitConfig cfg;
    cfg.K = 1;
    cfg.max_outer_iters = 60;
    cfg.seed = 404;
    const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
    const double rmse1 = rmse_peaks(out.state.p, gt.state.p);

    const bool pass = med_fit < med_nmf && rmse1 < 1e-3;
    report(2, "deconvolution beats the NMF baseline", pass,
           "median RMSE " + fmt(med_fit) + " vs NMF " + fmt(med_nmf) +
               ", K=1 noise-free RMSE " + fmt(rmse1));
  }

  // ---------------------------------------------------------------- 3
  {
    SimConfig clean = SimConfig::make_default();
    clean.noise_free_bulk = true;
    clean.seed = 31;
    const GroundTruth gt_clean = simulate(clean);
    const double corr_clean =
        weighted_sum_check(gt_clean.dataset.C, gt_clean.state.p, gt_clean.state.pi)
            .correlation;

    SimConfig noisy = SimConfig::make_default();
    noisy.dims = Dims{10, 4, 1000, 3, 3};
    noisy.hp = HyperParams::defaults(noisy.dims);
    noisy.hp.eta = Eigen::VectorXd::Constant(1000, 6.0);
    noisy.hp.Lambda_diag = Eigen::VectorXd::Constant(1000, 9.0);
    noisy.hp.zeta = 0.05;
    noisy.seed = 32;
    const GroundTruth gt_noisy = simulate(noisy);
    const double corr_noisy =
        weighted_sum_check(gt_noisy.dataset.C, gt_noisy.state.p, gt_noisy.state.pi)
            .correlation;

    const bool pass = corr_clean >= 1.0 - 1e-12 && corr_noisy > 0.99;
    report(3, "weighted-sum validation of the bulk model", pass,
           "noise-free corr 1 - " + fmt(1.0 - corr_clean) + ", noisy corr " +
               fmt(corr_noisy));
  }

  // ---------------------------------------------------------------- 4
  {
    RngStream rng(2718, 0);
    bool pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const int d = 1 + static_cast<int>(rng.next_u64() % 32);
      Eigen::MatrixXd R(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) R(i, j) = 2.0 * rng.normal();
      const Eigen::MatrixXd B = R + R.transpose();
      const Eigen::MatrixXd rstar = B * B;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          0.5 * (rstar + rstar.transpose()), Eigen::EigenvaluesOnly);
      const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
      const double ratio =
          es.eigenvalues().minCoeff() / std::max(lmax, 1e-300);
      worst = std::min(worst, ratio);
      if (ratio < -1e-8) pass = false;
    }
    report(4, "squared symmetrized networks stay PSD", pass,
           "worst min-eig ratio " + fmt(worst) + " over 10000 draws");
  }

  // ---------------------------------------------------------------- 5
  {
    double max_err = 0.0;
    for (const auto& r : runs) max_err = std::max(max_err, r.max_row_sum_err);
    // vb-flavor rows as well
    for (int trial = 0; trial < 20; ++trial) {
      toy::Instance t = toy::make(7000 + trial, 12, 3, 5, 3);
      const Responsibilities r = e_step_soft(t.data, t.state, t.hp);
      for (int j = 0; j < 12; ++j)
        max_err = std::max(max_err, std::abs(r.matrix().row(j).sum() - 1.0));
    }

    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
      toy::Instance t = toy::make(8000 + trial, 10, 3, 5, 3);
      const Eigen::VectorXi z = e_step_map(t.data, t.state, t.hp);
      const Eigen::MatrixXd logw =
          e_step_log_weights(t.data, t.state, t.hp, ExpectationStyle::point);
      for (int j = 0; j < 10; ++j) {
        int best = 0;
        for (int k = 1; k < 3; ++k)
          if (logw(j, k) > logw(j, best)) best = k;
        if (z[j] != best) ++mismatches;
      }
    }
    const bool pass = max_err <= 1e-12 && mismatches == 0;
    report(5, "E-step contracts (row sums, MAP agreement)", pass,
           "max row-sum error " + fmt(max_err) + ", MAP mismatches " +
               std::to_string(mismatches) + "/1000 cells");
  }

  // ---------------------------------------------------------------- 6
  {
    bool pass = true;
    std::string why = "all oracles matched";

    // (b) stick update vs per-stick grid maximization
    {
      Eigen::VectorXd counts(3);
      counts << 11.0, 3.0, 6.0;
      const double phi = 1.4;
      const Eigen::VectorXd got = m_step_pi(counts, phi);
      Eigen::VectorXd v(2);
      for (int k = 0; k < 2; ++k) {
        const double a = 1.0 + counts[k];
        double tail = 0.0;
        for (int k2 = k + 1; k2 < 3; ++k2) tail += counts[k2];
        const double b = phi + tail;
        v[k] = oracle::grid_argmax_refined(
            [&](double x) { return a * std::log(x) + b * std::log(1.0 - x); }, 1e-6,
            1.0 - 1e-6, 1e-3, 1e-6);
      }
      if ((got - stick_break(v)).cwiseAbs().maxCoeff() > 1e-4) {
        pass = false;
        why = "stick update off its grid oracle";
      }
    }

    // (c) mean update vs d=1 grid
    {
      toy::Instance t = toy::make(606, 5, 1, 3, 1);
      const Responsibilities resp =
          Responsibilities::from_probabilities(Eigen::MatrixXd::Ones(5, 1));
      LatentState st = t.state;
      m_step_mu_k(t.data, resp, t.hp, st);
      const double sigma = t.state.Sigma[0].matrix()(0, 0);
      const double sigma1 = t.state.Sigma1.matrix()(0, 0);
      const auto q = [&](double mu) {
        double obj = -0.5 * std::pow(mu - t.state.mu1[0], 2) / sigma1;
        for (int j = 0; j < 5; ++j)
          obj -= 0.5 * std::pow(t.data.X(0, j) - t.state.alpha[j] * mu, 2) /
                 (t.state.beta[j] * sigma);
        return obj;
      };
      const double grid = oracle::grid_argmax_refined(q, -10.0, 10.0, 1e-2, 1e-5);
      if (std::abs(st.mu(0, 0) - grid) > 1e-4) {
        pass = false;
        why = "mean update off its grid oracle";
      }
    }

    // (d) covariance update vs precision grid
    {
      toy::Instance t = toy::make(607, 7, 1, 3, 1);
      const Responsibilities resp =
          Responsibilities::from_probabilities(Eigen::MatrixXd::Ones(7, 1));
      LatentState st = t.state;
      m_step_sigma_k(t.data, resp, t.hp, st, 1e-8);
      const double rstar = grn_square(t.state.R[0]).matrix()(0, 0);
      const auto q = [&](double sprec) {
        double obj = 0.5 * (t.hp.gamma - 2.0) * std::log(sprec) - 0.5 * rstar * sprec;
        for (int j = 0; j < 7; ++j) {
          const double resid = t.data.X(0, j) - t.state.alpha[j] * st.mu(0, 0);
          obj += 0.5 * (std::log(sprec) - sprec * resid * resid / t.state.beta[j]);
        }
        return obj;
      };
      const double s_grid = oracle::grid_argmax_refined(q, 1e-4, 50.0, 1e-2, 1e-6);
      if (std::abs(1.0 / st.Sigma[0].matrix()(0, 0) - s_grid) / s_grid > 1e-4) {
        pass = false;
        why = "covariance update off its grid oracle";
      }
    }

    // (g) shared mean vs grid
    {
      toy::Instance t = toy::make(608, 4, 1, 3, 2);
      const double sigma1 = t.state.Sigma1.matrix()(0, 0);
      const double sigma2 = t.hp.Sigma2.matrix()(0, 0);
      const auto q = [&](double m1) {
        double obj = -0.5 * std::pow(m1 - t.hp.mu2[0], 2) / sigma2;
        for (int k = 0; k < 2; ++k)
          obj -= 0.5 * std::pow(t.state.mu(0, k) - m1, 2) / sigma1;
        return obj;
      };
      const double grid = oracle::grid_argmax_refined(q, -10.0, 10.0, 1e-2, 1e-5);
      if (std::abs(m_step_mu1(t.state, t.hp, false)[0] - grid) > 1e-4) {
        pass = false;
        why = "shared-mean update off its grid oracle";
      }
    }

    // (h) shared covariance vs precision grid
    {
      toy::Instance t = toy::make(609, 4, 1, 3, 3);
      const SpdMatrix got = m_step_sigma1(t.state, t.hp);
      double scatter = 0.0;
      for (int k = 0; k < 3; ++k)
        scatter += std::pow(t.state.mu(0, k) - t.state.mu1[0], 2);
      const double dS2 = t.hp.Sigma2.matrix()(0, 0);
      const auto q = [&](double s) {
        return 0.5 * 3.0 * std::log(s) - 0.5 * s * scatter - 0.5 * std::log(s) -
               0.5 * dS2 * s;
      };
      const double s_grid = oracle::grid_argmax_refined(q, 1e-4, 100.0, 1e-2, 1e-6);
      if (std::abs(1.0 / got.matrix()(0, 0) - s_grid) / s_grid > 1e-4) {
        pass = false;
        why = "shared-covariance update off its grid oracle";
      }
    }

    // (e, f) cell scalings: analytic derivative vs central differences,
    // non-decreasing objective
    {
      RngStream rng(610, 0);
      for (int trial = 0; trial < 50 && pass; ++trial) {
        CellScalingTerms terms;
        terms.quad = 0.5 + 3.0 * rng.uniform();
        terms.cross = 2.0 * rng.normal();
        terms.resid = 0.5 + 4.0 * rng.uniform();
        Dims dims{1, 3, 2, 1, 1};
        HyperParams hp = HyperParams::defaults(dims);
        const double beta = 0.5 + rng.uniform();
        const double t0 = rng.normal();
        const double h = 1e-6;
        const double fd_a = (alpha_objective(t0 + h, terms, beta, hp) -
                             alpha_objective(t0 - h, terms, beta, hp)) /
                            (2.0 * h);
        const double an_a = alpha_objective_grad(t0, terms, beta, hp);
        const double fd_b = (beta_objective(t0 + h, terms, 3, hp) -
                             beta_objective(t0 - h, terms, 3, hp)) /
                            (2.0 * h);
        const double an_b = beta_objective_grad(t0, terms, 3, hp);
        if (std::abs(fd_a - an_a) / std::max(1.0, std::abs(an_a)) > 1e-4 ||
            std::abs(fd_b - an_b) / std::max(1.0, std::abs(an_b)) > 1e-4) {
          pass = false;
          why = "cell-scaling derivatives off finite differences";
        }
      }
      for (int trial = 0; trial < 50 && pass; ++trial) {
        toy::Instance t = toy::make(9500 + trial, 6, 2, 4, 2);
        const Responsibilities resp = e_step_soft(t.data, t.state, t.hp,
                                                  ExpectationStyle::point);
        LatentState st = t.state;
        // objective before/after for each cell
        std::vector<CellScalingTerms> before(6);
        for (int j = 0; j < 6; ++j)
          before[j] = cell_scaling_terms(t.data.X.col(j), resp.matrix().row(j), st,
                                         st.alpha[j]);
        Eigen::VectorXd alpha_old = st.alpha;
        m_step_alpha(t.data, resp, t.hp, st);
        for (int j = 0; j < 6; ++j) {
          const double f_old =
              alpha_objective(std::log(alpha_old[j]), before[j], st.beta[j], t.hp);
          const double f_new =
              alpha_objective(std::log(st.alpha[j]), before[j], st.beta[j], t.hp);
          if (f_new < f_old - 1e-9) {
            pass = false;
            why = "alpha update decreased its objective";
          }
        }
      }
    }

    // (i) network block: finite differences + monotone inner trace
    {
      for (int trial = 0; trial < 5 && pass; ++trial) {
        toy::Instance t = toy::make(611 + trial, 4, 4, 6, 1);
        const auto f = [&](const Eigen::MatrixXd& Rk) {
          return r_block_objective(Rk, t.state.Sigma[0], t.state.p.row(0), t.prior,
                                   t.hp);
        };
        const Eigen::MatrixXd analytic = r_block_gradient(
            t.state.R[0], t.state.Sigma[0], t.state.p.row(0), t.prior, t.hp);
        const Eigen::MatrixXd fd = oracle::fd_gradient(f, t.state.R[0], 1e-6);
        if ((analytic - fd).norm() / std::max(1.0, analytic.norm()) > 1e-4) {
          pass = false;
          why = "network gradient off finite differences";
        }
      }
      for (int trial = 0; trial < 100 && pass; ++trial) {
        toy::Instance t = toy::make(9000 + trial, 4, 3, 5, 1);
        LatentState st = t.state;
        double prev =
            r_block_objective(st.R[0], st.Sigma[0], st.p.row(0), t.prior, t.hp);
        for (int step = 0; step < 4; ++step) {
          m_step_R(t.prior, t.hp, st, 1, 1e-3);
          const double now =
              r_block_objective(st.R[0], st.Sigma[0], st.p.row(0), t.prior, t.hp);
          if (now < prev - 1e-9) {
            pass = false;
            why = "network inner trace decreased";
          }
          prev = now;
        }
      }
    }

    // (j) peak block: finite differences + objective never decreases
    {
      for (int trial = 0; trial < 5 && pass; ++trial) {
        toy::Instance t = toy::make(617 + trial, 5, 4, 8, 2);
        const auto f = [&](const Eigen::MatrixXd& pm) {
          return p_block_objective(pm, t.state, t.data, t.prior, t.hp);
        };
        const Eigen::MatrixXd analytic =
            p_block_gradient(t.state.p, t.state, t.data, t.prior, t.hp);
        const Eigen::MatrixXd fd = oracle::fd_gradient(f, t.state.p, 1e-6);
        if ((analytic - fd).norm() / std::max(1.0, analytic.norm()) > 1e-4) {
          pass = false;
          why = "peak gradient off finite differences";
        }
      }
      for (int trial = 0; trial < 50 && pass; ++trial) {
        toy::Instance t = toy::make(9800 + trial, 5, 3, 6, 2);
        LatentState st = t.state;
        const double before = p_block_objective(st.p, st, t.data, t.prior, t.hp);
        m_step_p(t.data, t.prior, t.hp, st);
        const double after = p_block_objective(st.p, st, t.data, t.prior, t.hp);
        if (after < before - 1e-9) {
          pass = false;
          why = "peak update decreased its objective";
        }
      }
    }

    report(6, "M-step oracle equivalence and gradient checks", pass, why);
  }

  // ---------------------------------------------------------------- 7
  {
    double worst = 0.0;
    for (const auto& r : runs) worst = std::min(worst, r.min_trace_delta);
    const bool pass = worst >= -1e-6;
    report(7, "monotone outer objective across 10 fits", pass,
           "worst per-iteration delta " + fmt(worst));
  }

  // ---------------------------------------------------------------- 8
  {
    SimConfig sim = SimConfig::make_default();
    sim.seed = 505;
    const GroundTruth gt = simulate(sim);
    const Eigen::MatrixXd Y = normalize_cells(gt.dataset, gt.state);
    bool pass = true;
    double worst_ratio = 0.0;
    for (int k = 0; k < gt.dims.K; ++k) {
      std::vector<int> members;
      for (int j = 0; j < gt.dims.n; ++j)
        if (gt.state.z[j] == k) members.push_back(j);
      if (members.size() < 5) continue;
      for (int i = 0; i < gt.dims.d; ++i) {
        double mean = 0.0;
        for (int j : members) mean += Y(i, j);
        mean /= members.size();
        double var = 0.0;
        for (int j : members) var += std::pow(Y(i, j) - mean, 2);
        var /= (members.size() - 1);
        const double se = std::sqrt(var / members.size());
        const double ratio = std::abs(mean - gt.state.mu(i, k)) / std::max(se, 1e-12);
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio > 3.0) pass = false;
      }
    }
    // exact algebraic case
    Dataset exact = gt.dataset;
    for (int j = 0; j < gt.dims.n; ++j)
      exact.X.col(j) = gt.state.alpha[j] * gt.state.mu.col(gt.state.z[j]);
    const Eigen::MatrixXd Yx = normalize_cells(exact, gt.state);
    double exact_err = 0.0;
    for (int j = 0; j < gt.dims.n; ++j)
      exact_err = std::max(exact_err, (Yx.col(j) - gt.state.mu.col(gt.state.z[j]))
                                          .cwiseAbs()
                                          .maxCoeff());
    if (exact_err > 1e-12) pass = false;
    report(8, "normalization recenters cells on cluster means", pass,
           "worst |mean - mu| / SE " + fmt(worst_ratio) + ", exact-case error " +
               fmt(exact_err));
  }

  // ---------------------------------------------------------------- 9
  {
    bool pass = true;
    std::string detail;

    Eigen::MatrixXd V(3, 3);
    V << 2.0, 0.6, 0.4, 0.6, 1.5, 0.5, 0.4, 0.5, 1.0;
    const SpdMatrix scale = SpdMatrix::from_psd(V);
    const double dof = 20.0;
    RngStream rng(5150, 0);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
    double min_eig = 1e300;
    for (int i = 0; i < 100000; ++i) {
      const SpdMatrix W = sample_wishart_bartlett(scale, dof, rng);
      sum += W.matrix();
      if (i % 1000 == 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W.matrix(),
                                                          Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      }
    }
    const Eigen::MatrixXd mean = sum / 1e5;
    double worst_rel = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        worst_rel = std::max(worst_rel,
                             std::abs(mean(i, j) - dof * V(i, j)) /
                                 std::abs(dof * V(i, j)));
    if (worst_rel > 0.03 || min_eig < 0.0) pass = false;
    detail = "wishart mean rel err " + fmt(worst_rel);

    RngStream rng2(5151, 0);
    double tsum = 0.0;
    double tmin = 1e300;
    for (int i = 0; i < 100000; ++i) {
      const double x = sample_trunc_normal_scalar(0.0, 1.0, 0.0, rng2);
      tsum += x;
      tmin = std::min(tmin, x);
    }
    const double tmean = tsum / 1e5;
    const double expected = std::sqrt(2.0 / M_PI);
    if (std::abs(tmean - expected) / expected > 0.02 || tmin < 0.0) pass = false;
    detail += ", half-normal mean rel err " + fmt(std::abs(tmean - expected) / expected);

    // bit reproducibility
    RngStream a(777, 3), b(777, 3);
    const SpdMatrix eye = SpdMatrix::from_psd(Eigen::MatrixXd::Identity(2, 2));
    for (int i = 0; i < 100; ++i) {
      const Eigen::MatrixXd wa = sample_wishart_bartlett(eye, 5.0, a).matrix();
      const Eigen::MatrixXd wb = sample_wishart_bartlett(eye, 5.0, b).matrix();
      if ((wa - wb).cwiseAbs().maxCoeff() != 0.0) pass = false;
    }
    report(9, "sampler moments, domains, reproducibility", pass, detail);
  }

  // ---------------------------------------------------------------- 10
  {
    const fs::path tmp =
        fs::temp_directory_path() / ("symphony_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(tmp);
    bool pass = true;
    std::string detail = "round trips byte-identical";

    toy::Instance t = toy::make(31337, 6, 3, 5, 2);
    Checkpoint ck;
    ck.seed = 31337;
    ck.config_hash = "0123456789abcdef";
    ck.dims = t.dims;
    ck.hp = t.hp;
    ck.state = t.state;
    ck.report.elbo_trace = {-10.0, -9.5};
    ck.report.iterations_run = 2;
    const std::string p1 = (tmp / "ck.json").string();
    const std::string p2 = (tmp / "ck2.json").string();
    write_checkpoint(p1, ck);
    write_checkpoint(p2, read_checkpoint(p1));
    if (slurp(p1) != slurp(p2)) {
      pass = false;
      detail = "checkpoint round trip differs";
    }

    const auto run_sim = [&](const std::string& out) {
      return cli_dispatch({"simulate", "--seed", "55", "--n", "25", "--d", "4", "--l",
                           "10", "--k", "2", "--out-dir", out, "--quiet"});
    };
    if (run_sim((tmp / "s1").string()) != 0 || run_sim((tmp / "s2").string()) != 0)
      pass = false;
    for (const std::string f :
         {"X.tsv", "C.tsv", "mapping.tsv", "truth.json", "z_true.tsv"}) {
      if (slurp((tmp / "s1" / f).string()) != slurp((tmp / "s2" / f).string())) {
        pass = false;
        detail = "simulate outputs differ across runs: " + f;
      }
    }
    std::error_code ec;
    fs::remove_all(tmp, ec);
    report(10, "checkpoint and simulate outputs are byte-stable", pass, detail);
  }

  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
