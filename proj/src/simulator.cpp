#include "symphony/simulator.hpp"

#include <cmath>

#include "symphony/samplers.hpp"

namespace symphony {

SimConfig SimConfig::make_default() {
  SimConfig cfg;
  cfg.dims = Dims{100, 10, 50, 3, 3};
  cfg.hp = HyperParams::defaults(cfg.dims);
  // Cluster means spread wide enough relative to the network-driven
  // covariance scale that desk-size runs are recoverable.
  cfg.hp.mu2 = Eigen::VectorXd::Zero(cfg.dims.d);
  cfg.hp.Sigma2 = SpdMatrix::from_psd(49.0 *
                                      Eigen::MatrixXd::Identity(cfg.dims.d, cfg.dims.d));
  return cfg;
}

RegulatoryPrior make_random_prior(const Dims& dims, const RandomPriorRecipe& recipe,
                                  RngStream& rng) {
  if (recipe.motif_density < 0.0 || recipe.motif_density > 1.0)
    throw DomainError("make_random_prior: motif density must lie in [0,1]");
  const int d = dims.d;
  RegulatoryPrior prior;
  prior.mapping = Eigen::MatrixXi::Constant(d, d, -1);
  prior.M = Eigen::MatrixXi::Zero(d, d);
  prior.S = Eigen::MatrixXd::Zero(d, d);
  // Symmetric signs mimic the covariance-derived construction.
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double s = 0.0;
      if (rng.uniform() < recipe.sign_density) s = rng.uniform() < 0.5 ? 1.0 : -1.0;
      prior.S(i, j) = s;
      prior.S(j, i) = s;
    }
  int next_region = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (rng.uniform() < recipe.motif_density) {
        prior.M(i, j) = 1;
        prior.mapping(i, j) = next_region % dims.l;
        ++next_region;
      }
  return prior;
}

GroundTruth simulate(const SimConfig& cfg) {
  cfg.dims.validate();
  const Dims& dims = cfg.dims;
  HyperParams hp = cfg.hp;
  if (hp.eta.size() == 0) hp = HyperParams::defaults(dims);
  hp.validate(dims);

  RngStream root(cfg.seed, 0);
  RngStream prior_rng = root.substream(1);
  RngStream pi_rng = root.substream(2);
  RngStream peaks_rng = root.substream(3);
  RngStream network_rng = root.substream(4);
  RngStream cov_rng = root.substream(5);
  RngStream means_rng = root.substream(6);
  RngStream cells_rng = root.substream(7);
  RngStream bulk_rng = root.substream(8);

  GroundTruth gt;
  gt.dims = dims;
  gt.seed = cfg.seed;
  gt.prior = cfg.prior ? *cfg.prior : make_random_prior(dims, cfg.recipe, prior_rng);
  gt.prior.validate(dims);
  gt.hp = hp;

  LatentState& st = gt.state;
  const int K = dims.K;
  const int d = dims.d;

  // pi from Beta(1, phi) sticks.
  if (K > 1) {
    Eigen::VectorXd v(K - 1);
    for (int k = 0; k + 1 < K; ++k)
      v[k] = std::min(1.0 - 1e-12, std::max(1e-12, 1.0 - std::pow(pi_rng.uniform(), 1.0 / hp.phi)));
    st.pi = stick_break(v);
  } else {
    st.pi = Eigen::VectorXd::Ones(1);
  }

  // Peak profiles, networks, covariances per cluster.
  st.p.resize(K, dims.l);
  st.R.resize(K);
  st.Sigma.resize(K);
  for (int k = 0; k < K; ++k) {
    st.p.row(k) = sample_trunc_normal(hp.eta, hp.Lambda_diag, 0.0, peaks_rng).transpose();
    const Eigen::MatrixXd T = gt.prior.edge_mean(st.p.row(k));
    Eigen::MatrixXd Rk(d, d);
    const double sd = std::sqrt(hp.lambda);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) Rk(i, j) = T(i, j) + sd * network_rng.normal();
    st.R[k] = Rk;
    const SpdMatrix Rstar = grn_square(Rk);
    const SpdMatrix scale = SpdMatrix::from_psd(Rstar.inverse());
    const SpdMatrix prec = sample_wishart_bartlett(scale, hp.gamma, cov_rng);
    st.Sigma[k] = SpdMatrix::from_psd(prec.inverse());
  }

  // Mean hierarchy.
  st.mu1 = sample_mvn(hp.mu2, hp.Sigma2, means_rng);
  {
    const SpdMatrix scale1 =
        SpdMatrix::from_psd((double(d) * hp.Sigma2.matrix()).inverse());
    const SpdMatrix prec1 = sample_wishart_bartlett(scale1, double(d), means_rng);
    st.Sigma1 = SpdMatrix::from_psd(prec1.inverse());
  }
  st.mu.resize(d, K);
  for (int k = 0; k < K; ++k) st.mu.col(k) = sample_mvn(st.mu1, st.Sigma1, means_rng);

  // Cells.
  st.alpha.resize(dims.n);
  st.beta.resize(dims.n);
  st.z.resize(dims.n);
  gt.dataset.X.resize(d, dims.n);
  for (int j = 0; j < dims.n; ++j) {
    st.alpha[j] = std::exp(hp.nu + hp.delta * cells_rng.normal());
    st.beta[j] = std::exp(hp.omega + hp.theta * cells_rng.normal());
    const double u = cells_rng.uniform();
    int k = 0;
    double acc = st.pi[0];
    while (k + 1 < K && u > acc) acc += st.pi[++k];
    st.z[j] = k;
    const Eigen::VectorXd noise = st.Sigma[k].chol() * [&] {
      Eigen::VectorXd zv(d);
      for (int i = 0; i < d; ++i) zv[i] = cells_rng.normal();
      return zv;
    }();
    gt.dataset.X.col(j) = st.alpha[j] * st.mu.col(k) + std::sqrt(st.beta[j]) * noise;
  }

  // Bulk replicates.
  const double zeta = cfg.noise_free_bulk ? 0.0 : hp.zeta;
  gt.dataset.C = simulate_bulk_from_sorted(st.p, st.pi, zeta, dims.r, bulk_rng);
  // Clamp away the rare negative values that the noise can produce so the
  // dataset invariant C >= 0 holds.
  gt.dataset.C = gt.dataset.C.cwiseMax(0.0);

  gt.state.validate(dims);
  gt.dataset.validate();
  return gt;
}

Eigen::MatrixXd simulate_bulk_from_sorted(const Eigen::Ref<const Eigen::MatrixXd>& p_hat,
                                          const Eigen::Ref<const Eigen::VectorXd>& pi,
                                          double zeta, int r, RngStream& rng) {
  if (p_hat.rows() != pi.size())
    throw ShapeMismatch("simulate_bulk_from_sorted: profiles/weights disagree");
  const Eigen::VectorXd mix = p_hat.transpose() * pi;
  Eigen::MatrixXd C(p_hat.cols(), r);
  const double sd = zeta > 0.0 ? std::sqrt(zeta) : 0.0;
  for (int t = 0; t < r; ++t) {
    for (Eigen::Index m = 0; m < mix.size(); ++m)
      C(m, t) = mix[m] + (sd > 0.0 ? sd * rng.normal() : 0.0);
  }
  return C;
}

CovarianceSignDemo covariance_sign_variability_demo(std::uint64_t seed,
                                                    bool shared_profiles,
                                                    double gamma_override) {
  const Dims dims{10, 4, 6, 1, 3};
  HyperParams hp = HyperParams::defaults(dims);
  if (gamma_override > 0.0) hp.gamma = gamma_override;
  hp.lambda = shared_profiles ? 1e-6 : hp.lambda;

  for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
    RngStream rng(seed + attempt, 17);
    RegulatoryPrior prior = make_random_prior(dims, RandomPriorRecipe{0.5, 1.0}, rng);
    CovarianceSignDemo demo;
    demo.p.resize(dims.K, dims.l);
    Eigen::VectorXd shared;
    if (shared_profiles)
      shared = sample_trunc_normal(hp.eta, hp.Lambda_diag, 0.0, rng);
    for (int k = 0; k < dims.K; ++k) {
      demo.p.row(k) =
          shared_profiles
              ? shared.transpose()
              : sample_trunc_normal(hp.eta, hp.Lambda_diag, 0.0, rng).transpose();
      const Eigen::MatrixXd T = prior.edge_mean(demo.p.row(k));
      Eigen::MatrixXd Rk(dims.d, dims.d);
      const double sd = std::sqrt(hp.lambda);
      for (int i = 0; i < dims.d; ++i)
        for (int j = 0; j < dims.d; ++j) Rk(i, j) = T(i, j) + sd * rng.normal();
      const SpdMatrix Rstar = grn_square(Rk);
      const SpdMatrix scale = SpdMatrix::from_psd(Rstar.inverse());
      const SpdMatrix prec = sample_wishart_bartlett(scale, hp.gamma, rng);
      demo.Sigma.push_back(SpdMatrix::from_psd(prec.inverse()));
    }
    double scale = 0.0;
    for (int k = 0; k < dims.K; ++k)
      scale = std::max(scale, demo.Sigma[k].matrix().cwiseAbs().maxCoeff());
    const double thresh = 1e-2 * scale;
    for (int i = 0; i < dims.d && !demo.sign_flip_found; ++i)
      for (int j = i + 1; j < dims.d && !demo.sign_flip_found; ++j) {
        double lo = demo.Sigma[0].matrix()(i, j);
        double hi = lo;
        for (int k = 1; k < dims.K; ++k) {
          lo = std::min(lo, demo.Sigma[k].matrix()(i, j));
          hi = std::max(hi, demo.Sigma[k].matrix()(i, j));
        }
        if (lo < -thresh && hi > thresh) demo.sign_flip_found = true;
      }
    if (demo.sign_flip_found || shared_profiles) return demo;
  }
  throw NumericalError("covariance_sign_variability_demo: no sign flip found");
}

}  // namespace symphony
