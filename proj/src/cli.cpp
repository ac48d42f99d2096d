#include "symphony/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "symphony/evaluation.hpp"
#include "symphony/inference.hpp"
#include "symphony/io.hpp"
#include "symphony/simulator.hpp"
#include "symphony/version.hpp"

namespace symphony {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> make_labels(const std::string& prefix, int count) {
  int width = 1;
  for (int v = count; v >= 10; v /= 10) ++width;
  std::vector<std::string> labels;
  labels.reserve(count);
  for (int i = 1; i <= count; ++i) {
    std::ostringstream ss;
    ss << prefix;
    ss.width(width);
    ss.fill('0');
    ss << i;
    labels.push_back(ss.str());
  }
  return labels;
}

/// Option values merged from defaults < config file < command line.
class Settings {
 public:
  Settings(const CLI::App* cmd, std::map<std::string, std::string> file_cfg)
      : cmd_(cmd), file_(std::move(file_cfg)) {
    for (const auto& [k, v] : file_) unused_.insert(k);
  }

  std::string str(const std::string& flag, const std::string& dflt) {
    if (const CLI::Option* opt = find(flag); opt && opt->count() > 0)
      return opt->results().front();
    if (auto it = file_.find(key(flag)); it != file_.end()) {
      unused_.erase(it->first);
      return it->second;
    }
    return dflt;
  }

  double num(const std::string& flag, double dflt) {
    const std::string s = str(flag, "");
    if (s.empty()) return dflt;
    try {
      size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw UsageError("invalid numeric value for --" + flag + ": '" + s + "'");
    }
  }

  int integer(const std::string& flag, int dflt) {
    const double v = num(flag, static_cast<double>(dflt));
    if (v != std::floor(v)) throw UsageError("--" + flag + " must be an integer");
    return static_cast<int>(v);
  }

  bool flag(const std::string& name, bool dflt = false) {
    if (const CLI::Option* opt = find(name); opt && opt->count() > 0) return true;
    const std::string s = str(name, dflt ? "true" : "false");
    return s == "1" || s == "true" || s == "yes" || s == "on";
  }

  std::uint64_t seed() {
    if (const CLI::Option* opt = find("seed"); opt && opt->count() > 0)
      return std::stoull(opt->results().front());
    if (auto it = file_.find("seed"); it != file_.end()) {
      unused_.erase(it->first);
      return std::stoull(it->second);
    }
    if (const char* env = std::getenv("SYMPHONY_SEED")) return std::stoull(env);
    return 12345;
  }

  void check_unused() const {
    for (const auto& k : unused_)
      throw UsageError("unknown config key '" + k + "'");
  }

  std::map<std::string, std::string> merged_for_hash() {
    // canonical view of everything that shaped the run
    std::map<std::string, std::string> all = file_;
    for (const CLI::Option* opt : cmd_->get_options()) {
      if (opt->count() == 0) continue;
      std::string name = opt->get_name();
      while (!name.empty() && name.front() == '-') name.erase(name.begin());
      if (opt->results().empty())
        all[name] = "true";
      else
        all[name] = opt->results().front();
    }
    return all;
  }

 private:
  static std::string key(const std::string& flag) {
    std::string k = flag;
    for (auto& c : k)
      if (c == '-') c = '_';
    return k;
  }

  const CLI::Option* find(const std::string& flag) const {
    for (const CLI::Option* opt : cmd_->get_options()) {
      std::string name = opt->get_name();
      while (!name.empty() && name.front() == '-') name.erase(name.begin());
      if (name == flag) return opt;
    }
    if (cmd_->get_parent()) {
      for (const CLI::Option* opt : cmd_->get_parent()->get_options()) {
        std::string name = opt->get_name();
        while (!name.empty() && name.front() == '-') name.erase(name.begin());
        if (name == flag) return opt;
      }
    }
    return nullptr;
  }

  const CLI::App* cmd_;
  std::map<std::string, std::string> file_;
  std::set<std::string> unused_;
};

HyperParams hyperparams_from_settings(Settings& s, const Dims& dims,
                                      const Dataset& data) {
  HyperParams hp = HyperParams::defaults(dims);
  hp.set_empirical(data);
  hp.nu = s.num("nu", hp.nu);
  hp.delta = s.num("delta", hp.delta);
  hp.omega = s.num("omega", hp.omega);
  hp.theta = s.num("theta", hp.theta);
  hp.gamma = s.num("gamma", hp.gamma);
  hp.lambda = s.num("lambda", hp.lambda);
  hp.zeta = s.num("zeta", hp.zeta);
  hp.phi = s.num("phi", hp.phi);
  return hp;
}

FitConfig fit_config_from_settings(Settings& s, int K) {
  FitConfig cfg;
  cfg.K = K;
  cfg.max_outer_iters = s.integer("max-iters", cfg.max_outer_iters);
  cfg.elbo_rel_tol = s.num("tol", cfg.elbo_rel_tol);
  const std::string mode = s.str("e-step", "soft");
  if (mode == "soft")
    cfg.e_step_mode = FitConfig::EStepMode::soft;
  else if (mode == "map")
    cfg.e_step_mode = FitConfig::EStepMode::map;
  else
    throw UsageError("--e-step must be 'soft' or 'map'");
  cfg.z_update_period = s.integer("z-update-period", cfg.z_update_period);
  cfg.inner_gradient_steps = s.integer("inner-steps", cfg.inner_gradient_steps);
  cfg.gradient_step_size = s.num("step-size", cfg.gradient_step_size);
  cfg.mu1_k_squared = s.flag("mu1-k-squared");
  cfg.learn_M = s.flag("learn-m");
  cfg.scaled_wishart = s.flag("scaled-wishart");
  cfg.seed = s.seed();
  return cfg;
}

Checkpoint checkpoint_from_fit(const Dims& dims, const HyperParams& hp,
                               const FitResult& fit_out, std::uint64_t seed,
                               const std::string& hash) {
  Checkpoint ck;
  ck.tool_version = kToolVersion;
  ck.seed = seed;
  ck.config_hash = hash;
  ck.dims = dims;
  ck.hp = hp;
  ck.state = fit_out.state;
  ck.report = fit_out.report;
  return ck;
}

int cmd_simulate(Settings& s, const std::string& out_dir, bool quiet) {
  SimConfig cfg = SimConfig::make_default();
  cfg.dims.n = s.integer("n", cfg.dims.n);
  cfg.dims.d = s.integer("d", cfg.dims.d);
  cfg.dims.l = s.integer("l", cfg.dims.l);
  cfg.dims.r = s.integer("r", cfg.dims.r);
  cfg.dims.K = s.integer("k", cfg.dims.K);
  cfg.seed = s.seed();
  cfg.noise_free_bulk = s.flag("noise-free");
  cfg.recipe.motif_density = s.num("motif-density", cfg.recipe.motif_density);
  cfg.recipe.sign_density = s.num("sign-density", cfg.recipe.sign_density);

  cfg.hp = HyperParams::defaults(cfg.dims);
  cfg.hp.mu2 = Eigen::VectorXd::Zero(cfg.dims.d);
  cfg.hp.Sigma2 = SpdMatrix::from_psd(
      49.0 * Eigen::MatrixXd::Identity(cfg.dims.d, cfg.dims.d));
  cfg.hp.nu = s.num("nu", cfg.hp.nu);
  cfg.hp.delta = s.num("delta", cfg.hp.delta);
  cfg.hp.omega = s.num("omega", cfg.hp.omega);
  cfg.hp.theta = s.num("theta", cfg.hp.theta);
  cfg.hp.gamma = s.num("gamma", cfg.hp.gamma);
  cfg.hp.lambda = s.num("lambda", cfg.hp.lambda);
  cfg.hp.zeta = s.num("zeta", cfg.hp.zeta);
  cfg.hp.phi = s.num("phi", cfg.hp.phi);
  s.check_unused();

  const GroundTruth gt = simulate(cfg);
  const auto genes = make_labels("g", cfg.dims.d);
  const auto cells = make_labels("c", cfg.dims.n);
  const auto regions = make_labels("rg", cfg.dims.l);
  const auto reps = make_labels("rep", cfg.dims.r);

  fs::create_directories(out_dir);
  write_matrix_tsv(out_dir + "/X.tsv", "genes_x_cells", genes, cells, gt.dataset.X);
  write_matrix_tsv(out_dir + "/C.tsv", "regions_x_replicates", regions, reps,
                   gt.dataset.C);
  write_mapping_tsv(out_dir + "/mapping.tsv", gt.prior, genes, regions);
  write_ground_truth(out_dir + "/truth.json", gt);
  write_labels_tsv(out_dir + "/z_true.tsv", cells, gt.state.z);
  if (!quiet)
    std::cout << "simulate: wrote X.tsv C.tsv mapping.tsv truth.json z_true.tsv to "
              << out_dir << "\n";
  return 0;
}

int run_fit(Settings& s, const std::string& out_dir, bool quiet, bool deconvolve_mode) {
  const std::string expr = s.str("expr", "");
  const std::string bulk = s.str("bulk", "");
  const std::string mapping = s.str("mapping", "");
  if (expr.empty() || bulk.empty() || mapping.empty())
    throw UsageError("fit needs --expr, --bulk and --mapping");
  const LoadedDataset ds =
      load_dataset(expr, bulk, s.flag("raw-counts"), s.flag("raw-peaks"));
  const RegulatoryPrior prior = load_regulatory_prior(mapping, ds);

  const int K = s.integer("k", 3);
  Dims dims{ds.data.n(), ds.data.d(), ds.data.l(), ds.data.r(), K};
  dims.validate();
  HyperParams hp = hyperparams_from_settings(s, dims, ds.data);

  FitConfig cfg = fit_config_from_settings(s, K);
  const std::string fixed = s.str("fixed-labels", "");
  if (!fixed.empty()) cfg.fixed_z = read_labels_tsv(fixed, ds.cell_labels);
  if (deconvolve_mode && s.flag("no-expression")) cfg.use_expression = false;
  s.check_unused();

  const FitResult out = fit(ds.data, prior, hp, cfg);
  fs::create_directories(out_dir);
  const std::string hash = config_hash(s.merged_for_hash());
  write_checkpoint(out_dir + "/checkpoint.json",
                   checkpoint_from_fit(dims, hp, out, cfg.seed, hash));
  write_labels_tsv(out_dir + "/fitted_labels.tsv", ds.cell_labels, out.state.z);
  write_matrix_tsv(out_dir + "/p_hat.tsv", "clusters_x_regions",
                   make_labels("k", K), ds.region_labels, out.state.p);

  if (deconvolve_mode && s.str("baseline", "") == "nmf") {
    const NmfResult nmf = baseline_nmf_deconvolve(ds.data.C, K, 500, cfg.seed);
    write_matrix_tsv(out_dir + "/nmf_profiles.tsv", "clusters_x_regions",
                     make_labels("k", K), ds.region_labels, nmf.W.transpose());
    write_matrix_tsv(out_dir + "/nmf_weights.tsv", "clusters_x_one", make_labels("k", K),
                     {"weight"}, nmf.h);
  }
  if (!quiet) {
    std::cout << (deconvolve_mode ? "deconvolve" : "fit") << ": "
              << out.report.iterations_run << " iterations, "
              << (out.report.converged ? "converged" : "max iterations") << ", elbo "
              << (out.report.elbo_trace.empty() ? 0.0 : out.report.elbo_trace.back())
              << "\n";
  }
  return 0;
}

int cmd_normalize(Settings& s, const std::string& out_dir, bool quiet) {
  const std::string ck_path = s.str("checkpoint", "");
  const std::string expr = s.str("expr", "");
  if (ck_path.empty() || expr.empty())
    throw UsageError("normalize needs --checkpoint and --expr");
  s.check_unused();
  const Checkpoint ck = read_checkpoint(ck_path);
  const MatrixFile mf = read_matrix_tsv(expr);
  if (mf.values.rows() != ck.dims.d || mf.values.cols() != ck.dims.n)
    throw DimensionMismatch("normalize: expression matrix does not match checkpoint dims");
  Dataset data;
  data.X = mf.values;
  data.C = Eigen::MatrixXd::Zero(ck.dims.l, ck.dims.r);
  const Eigen::MatrixXd Y = normalize_cells(data, ck.state);
  fs::create_directories(out_dir);
  write_matrix_tsv(out_dir + "/Y.tsv", "genes_x_cells", mf.row_labels, mf.col_labels, Y);
  if (!quiet) std::cout << "normalize: wrote Y.tsv to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(Settings& s, const std::string& out_dir, bool quiet) {
  const std::string ck_path = s.str("checkpoint", "");
  const std::string truth_path = s.str("truth", "");
  const std::string expr = s.str("expr", "");
  const std::string bulk = s.str("bulk", "");
  if (ck_path.empty() || truth_path.empty())
    throw UsageError("evaluate needs --checkpoint and --truth");
  const std::uint64_t seed = s.seed();
  s.check_unused();

  const Checkpoint ck = read_checkpoint(ck_path);
  const GroundTruth gt = read_ground_truth(truth_path);
  if (gt.dims.n != ck.dims.n || gt.dims.d != ck.dims.d || gt.dims.l != ck.dims.l)
    throw DimensionMismatch("evaluate: truth and checkpoint dims disagree");

  std::vector<std::pair<std::string, double>> metrics;
  metrics.emplace_back("f_score_pairwise", f_score_clustering(ck.state.z, gt.state.z));
  metrics.emplace_back("f_score_matched", f_score_matched(ck.state.z, gt.state.z));
  metrics.emplace_back("rmse_peaks", rmse_peaks(ck.state.p, gt.state.p));

  Eigen::MatrixXd Rhat(ck.dims.K, ck.dims.d * ck.dims.d);
  Eigen::MatrixXd Rtrue(gt.dims.K, gt.dims.d * gt.dims.d);
  for (int k = 0; k < ck.dims.K; ++k) {
    Eigen::Map<const Eigen::VectorXd> vh(ck.state.R[k].data(), ck.dims.d * ck.dims.d);
    Rhat.row(k) = vh.transpose();
    Eigen::Map<const Eigen::VectorXd> vt(gt.state.R[k].data(), gt.dims.d * gt.dims.d);
    Rtrue.row(k) = vt.transpose();
  }
  if (ck.dims.K == gt.dims.K)
    metrics.emplace_back("rmse_networks", rmse_peaks(Rhat, Rtrue));

  if (!expr.empty()) {
    const MatrixFile mf = read_matrix_tsv(expr);
    const Eigen::VectorXi km = baseline_kmeans(mf.values, ck.dims.K, seed);
    metrics.emplace_back("f_score_kmeans", f_score_clustering(km, gt.state.z));
  }
  if (!bulk.empty()) {
    const MatrixFile bf = read_matrix_tsv(bulk);
    const WeightedSumCheck ws_fit =
        weighted_sum_check(bf.values, ck.state.p, ck.state.pi);
    const WeightedSumCheck ws_truth =
        weighted_sum_check(bf.values, gt.state.p, gt.state.pi);
    metrics.emplace_back("weighted_sum_corr_fit", ws_fit.correlation);
    metrics.emplace_back("weighted_sum_corr_truth", ws_truth.correlation);
    const NmfResult nmf =
        baseline_nmf_deconvolve(bf.values, ck.dims.K, 500, seed);
    metrics.emplace_back("rmse_peaks_nmf",
                         rmse_peaks(nmf.W.transpose(), gt.state.p));
    // per-region scatter pairs for external plotting
    fs::create_directories(out_dir);
    Eigen::MatrixXd scatter(bf.values.rows(), 3);
    scatter.col(0) = ws_fit.table.col(0);
    scatter.col(1) = ws_fit.table.col(1);
    scatter.col(2) = ws_truth.table.col(1);
    write_matrix_tsv(out_dir + "/weighted_sum_scatter.tsv", "regions_x_series",
                     bf.row_labels, {"bulk_mean", "mixed_fit", "mixed_truth"},
                     scatter);
  }
  metrics.emplace_back("elbo_final", ck.report.elbo_trace.empty()
                                         ? 0.0
                                         : ck.report.elbo_trace.back());
  metrics.emplace_back("converged", ck.report.converged ? 1.0 : 0.0);
  metrics.emplace_back("iterations", ck.report.iterations_run);
  metrics.emplace_back("identifiability_fraction", ck.report.identifiability_fraction);

  fs::create_directories(out_dir);
  std::ofstream out(out_dir + "/metrics.tsv", std::ios::binary);
  if (!out) throw DataError("cannot open '" + out_dir + "/metrics.tsv' for writing");
  out << "metric\tvalue\n";
  char buf[40];
  for (const auto& [name, value] : metrics) {
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out << name << "\t" << buf << "\n";
  }
  out.close();
  if (!quiet) {
    for (const auto& [name, value] : metrics) std::cout << name << "=" << value << " ";
    std::cout << "\n";
  }
  return 0;
}

int cmd_export_grn(Settings& s, const std::string& out_dir, bool quiet) {
  const std::string ck_path = s.str("checkpoint", "");
  if (ck_path.empty()) throw UsageError("export-grn needs --checkpoint");
  const double tau = s.num("threshold", 0.0);
  s.check_unused();
  const Checkpoint ck = read_checkpoint(ck_path);
  const GrnExport exp = export_grn(ck.state, tau);
  fs::create_directories(out_dir);
  std::ofstream out(out_dir + "/edges.tsv", std::ios::binary);
  if (!out) throw DataError("cannot open '" + out_dir + "/edges.tsv' for writing");
  out << "cluster\ttarget\tregulator\tweight\tsign\tcovariance\tweight_z\tcovariance_z\n";
  char buf[40];
  const auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& e : exp.edges)
    out << e.cluster << "\t" << e.target << "\t" << e.regulator << "\t" << fmt(e.weight)
        << "\t" << fmt(e.sign) << "\t" << fmt(e.covariance) << "\t" << fmt(e.weight_z)
        << "\t" << fmt(e.covariance_z) << "\n";
  out.close();
  if (!quiet)
    std::cout << "export-grn: " << exp.edges.size() << " edges at |R| >= " << tau
              << "\n";
  return 0;
}

void add_common_options(CLI::App* cmd) {
  cmd->add_option("--seed", "random seed (also via SYMPHONY_SEED)");
  cmd->add_option("--config", "key=value config file; flags override it");
  cmd->add_option("--out-dir", "output directory");
  cmd->add_flag("--quiet", "suppress progress output");
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Multi-view mixture model for clustering cells, deconvolving bulk "
               "epigenetic signal, and inferring per-cluster regulatory networks"};
  app.require_subcommand(1);

  CLI::App* sim = app.add_subcommand("simulate", "sample a synthetic dataset");
  add_common_options(sim);
  sim->add_option("--n", "number of cells");
  sim->add_option("--d", "number of genes");
  sim->add_option("--l", "number of regions");
  sim->add_option("--r", "number of bulk replicates");
  sim->add_option("--k", "number of clusters");
  sim->add_option("--motif-density", "probability a gene pair carries a motif");
  sim->add_option("--sign-density", "probability a sign entry is nonzero");
  sim->add_flag("--noise-free", "write bulk without observation noise");
  sim->add_option("--zeta", "bulk noise variance");
  sim->add_option("--lambda", "edge noise variance");
  sim->add_option("--gamma", "Wishart dof");
  sim->add_option("--phi", "stick-breaking concentration");
  sim->add_option("--nu", "alpha lognormal location");
  sim->add_option("--delta", "alpha lognormal scale");
  sim->add_option("--omega", "beta lognormal location");
  sim->add_option("--theta", "beta lognormal scale");

  const auto add_fit_options = [](CLI::App* cmd) {
    add_common_options(cmd);
    cmd->add_option("--expr", "expression matrix TSV (genes x cells)");
    cmd->add_option("--bulk", "bulk peak matrix TSV (regions x replicates)");
    cmd->add_option("--mapping", "region/gene-pair mapping TSV");
    cmd->add_option("--k", "number of clusters");
    cmd->add_option("--max-iters", "outer iteration cap");
    cmd->add_option("--tol", "relative objective tolerance");
    cmd->add_option("--e-step", "soft or map");
    cmd->add_option("--fixed-labels", "TSV freezing the clustering");
    cmd->add_flag("--raw-counts", "apply log(1+x) to the expression matrix");
    cmd->add_flag("--raw-peaks", "apply log(1+x) to the bulk matrix");
    cmd->add_option("--z-update-period", "hard-label refresh cadence");
    cmd->add_option("--inner-steps", "gradient steps per network block");
    cmd->add_option("--step-size", "initial network gradient step");
    cmd->add_flag("--mu1-k-squared", "use the K^2 shared-mean update variant");
    cmd->add_flag("--learn-m", "relax the motif indicator during fitting");
    cmd->add_flag("--scaled-wishart", "diagonal covariance rescaling refinement");
    cmd->add_option("--nu", "alpha lognormal location");
    cmd->add_option("--delta", "alpha lognormal scale");
    cmd->add_option("--omega", "beta lognormal location");
    cmd->add_option("--theta", "beta lognormal scale");
    cmd->add_option("--gamma", "Wishart dof");
    cmd->add_option("--lambda", "edge noise variance");
    cmd->add_option("--zeta", "bulk noise variance");
    cmd->add_option("--phi", "stick-breaking concentration");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "run variational EM on a dataset");
  add_fit_options(fit_cmd);

  CLI::App* dec = app.add_subcommand("deconvolve",
                                     "fit with the peak profiles as the target output");
  add_fit_options(dec);
  dec->add_flag("--no-expression", "bulk-only ablation");
  dec->add_option("--baseline", "also run a baseline: 'nmf'");

  CLI::App* norm = app.add_subcommand("normalize", "undo per-cell technical scalings");
  add_common_options(norm);
  norm->add_option("--checkpoint", "fitted checkpoint JSON");
  norm->add_option("--expr", "expression matrix TSV");

  CLI::App* eval = app.add_subcommand("evaluate", "score a fit against ground truth");
  add_common_options(eval);
  eval->add_option("--checkpoint", "fitted checkpoint JSON");
  eval->add_option("--truth", "ground-truth JSON from simulate");
  eval->add_option("--expr", "expression matrix TSV (for the k-means baseline)");
  eval->add_option("--bulk", "bulk matrix TSV (for deconvolution metrics)");

  CLI::App* grn = app.add_subcommand("export-grn", "write thresholded network edges");
  add_common_options(grn);
  grn->add_option("--checkpoint", "fitted checkpoint JSON");
  grn->add_option("--threshold", "minimum |R| for an edge to be exported");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    std::map<std::string, std::string> file_cfg;
    for (const CLI::Option* opt : cmd->get_options()) {
      if (opt->get_name() == "--config" && opt->count() > 0)
        file_cfg = read_config_file(opt->results().front());
    }
    Settings s(cmd, std::move(file_cfg));
    const std::string out_dir = s.str("out-dir", ".");
    const bool quiet = s.flag("quiet");

    if (cmd == sim) return cmd_simulate(s, out_dir, quiet);
    if (cmd == fit_cmd) return run_fit(s, out_dir, quiet, false);
    if (cmd == dec) return run_fit(s, out_dir, quiet, true);
    if (cmd == norm) return cmd_normalize(s, out_dir, quiet);
    if (cmd == eval) return cmd_evaluate(s, out_dir, quiet);
    if (cmd == grn) return cmd_export_grn(s, out_dir, quiet);
    throw UsageError("no subcommand selected");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace symphony
