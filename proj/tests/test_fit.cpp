#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "symphony/evaluation.hpp"
#include "symphony/inference.hpp"
#include "symphony/simulator.hpp"

using namespace symphony;

namespace {

void check_monotone(const std::vector<double>& trace, double slack = 1e-6) {
  for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - slack);
}

}  // namespace

TEST_CASE("degenerate K=1 data is recovered to high precision") {
  // exact data: every cell sits on mu_true, bulk equals p_true
  const int n = 60, d = 5, l = 20;
  Dims dims{n, d, l, 3, 1};
  RngStream rng(77, 0);
  Eigen::VectorXd mu_true(d);
  for (int i = 0; i < d; ++i) mu_true[i] = 2.0 * rng.normal();
  Eigen::VectorXd p_true(l);
  for (int m = 0; m < l; ++m) p_true[m] = 1.0 + rng.uniform();

  Dataset data;
  data.X = mu_true.replicate(1, n);
  data.C = p_true.replicate(1, 3);

  RegulatoryPrior prior;
  prior.mapping = Eigen::MatrixXi::Constant(d, d, -1);
  prior.M = Eigen::MatrixXi::Zero(d, d);
  prior.S = Eigen::MatrixXd::Zero(d, d);

  HyperParams hp = HyperParams::defaults(dims);
  hp.set_empirical(data);
  hp.zeta = 1e-9;

  FitConfig cfg;
  cfg.K = 1;
  cfg.max_outer_iters = 60;
  cfg.seed = 5;
  const FitResult out = fit(data, prior, hp, cfg);
  CHECK((out.state.mu.col(0) - mu_true).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((out.state.p.row(0).transpose() - p_true).cwiseAbs().maxCoeff() < 1e-3);
  check_monotone(out.report.elbo_trace);
}

TEST_CASE("synthetic run at the reference scale recovers the clustering") {
  SimConfig sim = SimConfig::make_default();  // n=100, K=3, d=10, l=50
  sim.seed = 1001;
  const GroundTruth gt = simulate(sim);

  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 3;
  cfg.max_outer_iters = 120;
  cfg.seed = 1001;
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);

  const double f = f_score_clustering(out.state.z, gt.state.z);
  CHECK(f >= 0.9);
  check_monotone(out.report.elbo_trace);
  // responsibilities stay row-stochastic throughout
  for (int j = 0; j < gt.dims.n; ++j)
    CHECK(std::abs(out.resp.matrix().row(j).sum() - 1.0) <= 1e-12);
  // every covariance stays PSD and every profile nonnegative
  CHECK((out.state.p.array() >= 0.0).all());
}

TEST_CASE("fixed labels stay fixed") {
  SimConfig sim = SimConfig::make_default();
  sim.dims = Dims{40, 5, 20, 2, 2};
  sim.hp = HyperParams::defaults(sim.dims);
  sim.hp.mu2 = Eigen::VectorXd::Zero(5);
  sim.hp.Sigma2 = SpdMatrix::from_psd(25.0 * Eigen::MatrixXd::Identity(5, 5));
  sim.seed = 4;
  const GroundTruth gt = simulate(sim);
  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 2;
  cfg.max_outer_iters = 25;
  cfg.fixed_z = gt.state.z;
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
  CHECK((out.state.z - gt.state.z).cwiseAbs().maxCoeff() == 0);
  check_monotone(out.report.elbo_trace);
}

TEST_CASE("fixed pi stays fixed") {
  SimConfig sim = SimConfig::make_default();
  sim.dims = Dims{30, 4, 12, 2, 2};
  sim.hp = HyperParams::defaults(sim.dims);
  sim.seed = 9;
  const GroundTruth gt = simulate(sim);
  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 2;
  cfg.max_outer_iters = 15;
  Eigen::VectorXd fixed(2);
  fixed << 0.25, 0.75;
  cfg.fixed_pi = fixed;
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
  CHECK((out.state.pi - fixed).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hard-assignment mode keeps a monotone trace") {
  SimConfig sim = SimConfig::make_default();
  sim.dims = Dims{50, 5, 15, 2, 2};
  sim.hp = HyperParams::defaults(sim.dims);
  sim.hp.Sigma2 = SpdMatrix::from_psd(36.0 * Eigen::MatrixXd::Identity(5, 5));
  sim.seed = 21;
  const GroundTruth gt = simulate(sim);
  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 2;
  cfg.e_step_mode = FitConfig::EStepMode::map;
  cfg.max_outer_iters = 40;
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
  check_monotone(out.report.elbo_trace);
}

TEST_CASE("bulk-only ablation still updates profiles monotonically") {
  SimConfig sim = SimConfig::make_default();
  sim.dims = Dims{30, 4, 10, 3, 2};
  sim.hp = HyperParams::defaults(sim.dims);
  sim.seed = 33;
  const GroundTruth gt = simulate(sim);
  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 2;
  cfg.use_expression = false;
  cfg.max_outer_iters = 20;
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
  CHECK((out.state.p.array() >= 0.0).all());
  check_monotone(out.report.elbo_trace);
  bool found_note = false;
  for (const auto& note : out.report.notes)
    if (note.find("expression view disabled") != std::string::npos) found_note = true;
  CHECK(found_note);
}

TEST_CASE("optional blocks keep the trace monotone") {
  SimConfig sim = SimConfig::make_default();
  sim.dims = Dims{36, 4, 10, 2, 2};
  sim.hp = HyperParams::defaults(sim.dims);
  sim.hp.Sigma2 = SpdMatrix::from_psd(25.0 * Eigen::MatrixXd::Identity(4, 4));
  sim.seed = 55;
  const GroundTruth gt = simulate(sim);
  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  SUBCASE("learn_M") {
    FitConfig cfg;
    cfg.K = 2;
    cfg.learn_M = true;
    cfg.max_outer_iters = 15;
    const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
    check_monotone(out.report.elbo_trace);
  }
  SUBCASE("mu1 K^2 variant") {
    FitConfig cfg;
    cfg.K = 2;
    cfg.mu1_k_squared = true;
    cfg.max_outer_iters = 15;
    const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
    check_monotone(out.report.elbo_trace);
  }
  SUBCASE("scaled wishart") {
    FitConfig cfg;
    cfg.K = 2;
    cfg.scaled_wishart = true;
    cfg.max_outer_iters = 10;
    const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
    check_monotone(out.report.elbo_trace);
  }
}

TEST_CASE("an empty initial cluster does not derail the fit") {
  SimConfig sim = SimConfig::make_default();
  sim.dims = Dims{24, 4, 10, 2, 2};
  sim.hp = HyperParams::defaults(sim.dims);
  sim.seed = 66;
  const GroundTruth gt = simulate(sim);
  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 3;
  cfg.init = FitConfig::Init::provided;
  cfg.init_labels = Eigen::VectorXi::Zero(24);
  for (int j = 12; j < 24; ++j) cfg.init_labels[j] = 1;  // cluster 2 empty
  cfg.max_outer_iters = 15;
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
  CHECK(out.state.mu.allFinite());
  CHECK(std::isfinite(out.report.elbo_trace.back()));
  check_monotone(out.report.elbo_trace);
}

TEST_CASE("report carries the identifiability diagnostic and notes") {
  SimConfig sim = SimConfig::make_default();
  sim.dims = Dims{20, 3, 8, 2, 2};
  sim.hp = HyperParams::defaults(sim.dims);
  sim.seed = 88;
  const GroundTruth gt = simulate(sim);
  HyperParams hp = gt.hp;
  hp.set_empirical(gt.dataset);

  FitConfig cfg;
  cfg.K = 2;
  cfg.max_outer_iters = 10;
  const FitResult out = fit(gt.dataset, gt.prior, hp, cfg);
  CHECK(out.report.identifiability_fraction >= 0.0);
  CHECK(out.report.identifiability_fraction <= 1.0);
  CHECK(!out.report.notes.empty());
  CHECK(out.report.iterations_run > 0);
  CHECK(!out.report.elbo_trace.empty());
}
