#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "symphony/cli.hpp"
#include "symphony/io.hpp"
#include "symphony/version.hpp"
#include "toy_instances.hpp"

using namespace symphony;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("symphony_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

Checkpoint make_checkpoint(std::uint64_t seed) {
  toy::Instance t = toy::make(seed, 5, 3, 4, 2);
  Checkpoint ck;
  ck.tool_version = kToolVersion;
  ck.seed = seed;
  ck.config_hash = "cafe0123cafe0123";
  ck.dims = t.dims;
  ck.hp = t.hp;
  ck.state = t.state;
  ck.report.elbo_trace = {-120.5, -118.25, -118.2499};
  ck.report.converged = true;
  ck.report.iterations_run = 3;
  ck.report.notes = {"test checkpoint"};
  return ck;
}

}  // namespace

TEST_CASE("matrix TSV round trip preserves labels and exact values") {
  TempDir dir;
  Eigen::MatrixXd m(2, 3);
  m << 1.5, -2.25, 3.0000000001, 0.1, 1e-17, -4.75e+100;
  write_matrix_tsv(dir / "m.tsv", "genes_x_cells", {"gA", "gB"}, {"c1", "c2", "c3"}, m);
  const MatrixFile mf = read_matrix_tsv(dir / "m.tsv");
  CHECK(mf.orientation == "genes_x_cells");
  CHECK(mf.row_labels == std::vector<std::string>{"gA", "gB"});
  CHECK(mf.col_labels == std::vector<std::string>{"c1", "c2", "c3"});
  CHECK((mf.values - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix parser reports line and column on bad cells") {
  TempDir dir;
  spit(dir / "bad.tsv", "tag\tc1\tc2\ng1\t1.0\toops\n");
  try {
    read_matrix_tsv(dir / "bad.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":2:") != std::string::npos);  // line 2
    CHECK(msg.find("oops") != std::string::npos);
  }
  spit(dir / "ragged.tsv", "tag\tc1\tc2\ng1\t1.0\n");
  CHECK_THROWS_AS(read_matrix_tsv(dir / "ragged.tsv"), ParseError);
  spit(dir / "dup.tsv", "tag\tc1\tc2\ng1\t1\t2\ng1\t3\t4\n");
  CHECK_THROWS_AS(read_matrix_tsv(dir / "dup.tsv"), DuplicateLabel);
}

TEST_CASE("raw counts are log1p-transformed, zero maps to zero") {
  TempDir dir;
  Eigen::MatrixXd X(2, 2);
  X << 0.0, 3.0, 7.0, 0.0;
  Eigen::MatrixXd C(3, 1);
  C << 0.0, 1.0, 9.0;
  write_matrix_tsv(dir / "X.tsv", "genes_x_cells", {"g1", "g2"}, {"c1", "c2"}, X);
  write_matrix_tsv(dir / "C.tsv", "regions_x_replicates", {"r1", "r2", "r3"}, {"rep1"},
                   C);
  const LoadedDataset ds = load_dataset(dir / "X.tsv", dir / "C.tsv", true, true);
  CHECK(ds.data.X(0, 0) == 0.0);
  CHECK(ds.data.X(1, 0) == doctest::Approx(std::log(8.0)));
  CHECK(ds.data.C(0, 0) == 0.0);
  CHECK(ds.data.C(2, 0) == doctest::Approx(std::log(10.0)));
}

TEST_CASE("mapping loader resolves labels and rejects bad input") {
  TempDir dir;
  Eigen::MatrixXd X(2, 4);
  X << 1, 2, 3, 4, 4, 3, 2, 1;  // anti-correlated genes
  Eigen::MatrixXd C(2, 1);
  C << 1.0, 2.0;
  write_matrix_tsv(dir / "X.tsv", "genes_x_cells", {"gA", "gB"}, {"c1", "c2", "c3", "c4"},
                   X);
  write_matrix_tsv(dir / "C.tsv", "regions_x_replicates", {"rg1", "rg2"}, {"rep1"}, C);
  const LoadedDataset ds = load_dataset(dir / "X.tsv", dir / "C.tsv");

  // explicit signs taken verbatim
  spit(dir / "map.tsv",
       "region_id\ttarget_gene\tregulator_gene\tmotif\tsign\n"
       "rg1\tgA\tgB\t1\t1\n"
       "rg2\tgB\tgA\t1\t-1\n");
  const RegulatoryPrior prior = load_regulatory_prior(dir / "map.tsv", ds);
  CHECK(prior.M(0, 1) == 1);
  CHECK(prior.S(0, 1) == 1.0);
  CHECK(prior.S(1, 0) == -1.0);
  CHECK(prior.mapping(0, 1) == 0);
  CHECK(prior.mapping(1, 0) == 1);

  // missing sign column falls back to the empirical covariance sign
  spit(dir / "map_nosign.tsv",
       "region_id\ttarget_gene\tregulator_gene\tmotif\n"
       "rg1\tgA\tgB\t1\n");
  const RegulatoryPrior prior2 = load_regulatory_prior(dir / "map_nosign.tsv", ds);
  CHECK(prior2.S(0, 1) == -1.0);  // genes are anti-correlated

  spit(dir / "map_badgene.tsv",
       "region_id\ttarget_gene\tregulator_gene\tmotif\n"
       "rg1\tgA\tgZ\t1\n");
  try {
    load_regulatory_prior(dir / "map_badgene.tsv", ds);
    FAIL("expected DimensionMismatch");
  } catch (const DimensionMismatch& e) {
    CHECK(std::string(e.what()).find("gZ") != std::string::npos);
  }

  spit(dir / "map_badregion.tsv",
       "region_id\ttarget_gene\tregulator_gene\tmotif\n"
       "rg9\tgA\tgB\t1\n");
  CHECK_THROWS_AS(load_regulatory_prior(dir / "map_badregion.tsv", ds), UnknownRegion);

  spit(dir / "map_dup.tsv",
       "region_id\ttarget_gene\tregulator_gene\tmotif\n"
       "rg1\tgA\tgB\t1\n"
       "rg2\tgA\tgB\t1\n");
  CHECK_THROWS_AS(load_regulatory_prior(dir / "map_dup.tsv", ds), DuplicateLabel);
}

TEST_CASE("checkpoint write-read-write is byte-identical") {
  TempDir dir;
  const Checkpoint ck = make_checkpoint(1234);
  write_checkpoint(dir / "ck.json", ck);
  const Checkpoint back = read_checkpoint(dir / "ck.json");
  write_checkpoint(dir / "ck2.json", back);
  CHECK(slurp(dir / "ck.json") == slurp(dir / "ck2.json"));
  CHECK(back.seed == ck.seed);
  CHECK(back.dims.K == ck.dims.K);
  CHECK((back.state.mu - ck.state.mu).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("newer checkpoint schema versions are rejected") {
  TempDir dir;
  write_checkpoint(dir / "ck.json", make_checkpoint(5));
  std::string text = slurp(dir / "ck.json");
  const std::string needle = "\"schema_version\": 1";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "\"schema_version\": 999");
  spit(dir / "ck_future.json", text);
  CHECK_THROWS_AS(read_checkpoint(dir / "ck_future.json"), ParseError);
}

TEST_CASE("ground truth JSON round trips") {
  TempDir dir;
  toy::Instance t = toy::make(9, 6, 3, 5, 2);
  GroundTruth gt;
  gt.state = t.state;
  gt.dataset = t.data;
  gt.prior = t.prior;
  gt.hp = t.hp;
  gt.dims = t.dims;
  gt.seed = 9;
  write_ground_truth(dir / "truth.json", gt);
  const GroundTruth back = read_ground_truth(dir / "truth.json");
  CHECK(back.seed == 9);
  CHECK((back.state.p - gt.state.p).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.prior.M - gt.prior.M).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("config files parse and hash deterministically") {
  TempDir dir;
  spit(dir / "run.cfg", "# a comment\nseed = 99\nk=4\n\nmax_iters = 30\n");
  const auto cfg = read_config_file(dir / "run.cfg");
  CHECK(cfg.at("seed") == "99");
  CHECK(cfg.at("k") == "4");
  CHECK(cfg.at("max_iters") == "30");
  CHECK(config_hash(cfg) == config_hash(cfg));
  auto cfg2 = cfg;
  cfg2["k"] = "5";
  CHECK(config_hash(cfg) != config_hash(cfg2));
  spit(dir / "bad.cfg", "not a pair\n");
  CHECK_THROWS_AS(read_config_file(dir / "bad.cfg"), ParseError);
}

TEST_CASE("labels files resolve against cell labels") {
  TempDir dir;
  spit(dir / "z.tsv", "cell\tcluster\nc2\t1\nc1\t0\n");
  const Eigen::VectorXi z = read_labels_tsv(dir / "z.tsv", {"c1", "c2"});
  CHECK(z[0] == 0);
  CHECK(z[1] == 1);
  spit(dir / "z_missing.tsv", "cell\tcluster\nc1\t0\n");
  CHECK_THROWS_AS(read_labels_tsv(dir / "z_missing.tsv", {"c1", "c2"}),
                  DimensionMismatch);
  spit(dir / "z_unknown.tsv", "cell\tcluster\ncX\t0\n");
  CHECK_THROWS_AS(read_labels_tsv(dir / "z_unknown.tsv", {"c1", "c2"}),
                  DimensionMismatch);
}

TEST_CASE("CLI pipeline: simulate, fit, evaluate, export, normalize") {
  TempDir dir;
  const std::string out = dir / "run";
  int rc = cli_dispatch({"simulate", "--seed", "7", "--n", "30", "--d", "5", "--l", "12",
                         "--k", "2", "--out-dir", out, "--quiet"});
  CHECK(rc == 0);
  CHECK(fs::exists(out + "/X.tsv"));
  CHECK(fs::exists(out + "/C.tsv"));
  CHECK(fs::exists(out + "/mapping.tsv"));
  CHECK(fs::exists(out + "/truth.json"));

  rc = cli_dispatch({"fit", "--expr", out + "/X.tsv", "--bulk", out + "/C.tsv",
                     "--mapping", out + "/mapping.tsv", "--k", "2", "--max-iters", "20",
                     "--seed", "7", "--out-dir", out, "--quiet"});
  CHECK(rc == 0);
  CHECK(fs::exists(out + "/checkpoint.json"));
  CHECK(fs::exists(out + "/p_hat.tsv"));

  rc = cli_dispatch({"evaluate", "--checkpoint", out + "/checkpoint.json", "--truth",
                     out + "/truth.json", "--expr", out + "/X.tsv", "--bulk",
                     out + "/C.tsv", "--out-dir", out, "--quiet"});
  CHECK(rc == 0);
  const std::string metrics = slurp(out + "/metrics.tsv");
  CHECK(metrics.find("f_score_pairwise") != std::string::npos);
  CHECK(metrics.find("rmse_peaks") != std::string::npos);
  CHECK(metrics.find("weighted_sum_corr_fit") != std::string::npos);
  CHECK(fs::exists(out + "/weighted_sum_scatter.tsv"));
  const MatrixFile scatter = read_matrix_tsv(out + "/weighted_sum_scatter.tsv");
  CHECK(scatter.col_labels ==
        std::vector<std::string>{"bulk_mean", "mixed_fit", "mixed_truth"});
  CHECK(scatter.values.rows() == 12);

  rc = cli_dispatch({"export-grn", "--checkpoint", out + "/checkpoint.json",
                     "--threshold", "0.5", "--out-dir", out, "--quiet"});
  CHECK(rc == 0);
  CHECK(slurp(out + "/edges.tsv").find("cluster\ttarget") != std::string::npos);

  rc = cli_dispatch({"normalize", "--checkpoint", out + "/checkpoint.json", "--expr",
                     out + "/X.tsv", "--out-dir", out, "--quiet"});
  CHECK(rc == 0);
  CHECK(fs::exists(out + "/Y.tsv"));
}

TEST_CASE("CLI deconvolve runs the ablation and the NMF baseline") {
  TempDir dir;
  const std::string out = dir / "run";
  REQUIRE(cli_dispatch({"simulate", "--seed", "3", "--n", "20", "--d", "4", "--l", "10",
                        "--k", "2", "--out-dir", out, "--quiet"}) == 0);
  const int rc = cli_dispatch({"deconvolve", "--expr", out + "/X.tsv", "--bulk",
                               out + "/C.tsv", "--mapping", out + "/mapping.tsv", "--k",
                               "2", "--max-iters", "10", "--no-expression", "--baseline",
                               "nmf", "--out-dir", out, "--quiet"});
  CHECK(rc == 0);
  CHECK(fs::exists(out + "/p_hat.tsv"));
  CHECK(fs::exists(out + "/nmf_profiles.tsv"));
  CHECK(fs::exists(out + "/nmf_weights.tsv"));
}

TEST_CASE("CLI exit codes distinguish usage, data, numerical, and success") {
  TempDir dir;
  // unknown flag: usage error
  CHECK(cli_dispatch({"simulate", "--definitely-not-a-flag"}) == 1);
  // no subcommand: usage error
  CHECK(cli_dispatch({}) == 1);
  // missing file: data error
  CHECK(cli_dispatch({"fit", "--expr", dir / "nope.tsv", "--bulk", dir / "nope2.tsv",
                      "--mapping", dir / "nope3.tsv", "--quiet"}) == 2);
  // unknown config key: usage error
  spit(dir / "bad.cfg", "definitely_unknown=1\n");
  CHECK(cli_dispatch({"simulate", "--config", dir / "bad.cfg", "--out-dir", dir / "x",
                      "--quiet"}) == 1);
  // dof below the dimension: numerical error
  const std::string out = dir / "numfail";
  REQUIRE(cli_dispatch({"simulate", "--seed", "2", "--n", "15", "--d", "4", "--l", "8",
                        "--k", "2", "--out-dir", out, "--quiet"}) == 0);
  CHECK(cli_dispatch({"fit", "--expr", out + "/X.tsv", "--bulk", out + "/C.tsv",
                      "--mapping", out + "/mapping.tsv", "--k", "2", "--gamma", "1",
                      "--out-dir", out, "--quiet"}) == 3);
}

TEST_CASE("malformed checkpoint JSON is a parse error") {
  TempDir dir;
  spit(dir / "broken.json", "{ not json");
  CHECK_THROWS_AS(read_checkpoint(dir / "broken.json"), ParseError);
  spit(dir / "empty.json", "{}");
  CHECK_THROWS_AS(read_checkpoint(dir / "empty.json"), ParseError);
}

TEST_CASE("SYMPHONY_SEED provides the fallback seed") {
  TempDir dir;
  const std::string a = dir / "env";
  const std::string b = dir / "flag";
  ::setenv("SYMPHONY_SEED", "4242", 1);
  REQUIRE(cli_dispatch({"simulate", "--n", "15", "--d", "3", "--l", "6", "--k", "2",
                        "--out-dir", a, "--quiet"}) == 0);
  ::unsetenv("SYMPHONY_SEED");
  REQUIRE(cli_dispatch({"simulate", "--seed", "4242", "--n", "15", "--d", "3", "--l",
                        "6", "--k", "2", "--out-dir", b, "--quiet"}) == 0);
  CHECK(slurp(a + "/X.tsv") == slurp(b + "/X.tsv"));
  CHECK(slurp(a + "/C.tsv") == slurp(b + "/C.tsv"));
}

TEST_CASE("reference-scale pipeline clears the recovery bar end to end") {
  TempDir dir;
  const std::string out = dir / "full";
  REQUIRE(cli_dispatch({"simulate", "--seed", "7", "--n", "100", "--k", "3", "--d",
                        "10", "--l", "50", "--out-dir", out, "--quiet"}) == 0);
  REQUIRE(cli_dispatch({"fit", "--expr", out + "/X.tsv", "--bulk", out + "/C.tsv",
                        "--mapping", out + "/mapping.tsv", "--k", "3", "--seed", "7",
                        "--out-dir", out, "--quiet"}) == 0);
  REQUIRE(cli_dispatch({"evaluate", "--checkpoint", out + "/checkpoint.json", "--truth",
                        out + "/truth.json", "--expr", out + "/X.tsv", "--bulk",
                        out + "/C.tsv", "--out-dir", out, "--quiet"}) == 0);
  const std::string metrics = slurp(out + "/metrics.tsv");
  double f_score = 0.0;
  std::stringstream ss(metrics);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("f_score_pairwise\t", 0) == 0)
      f_score = std::stod(line.substr(line.find('\t') + 1));
  }
  CHECK(f_score >= 0.9);
}

TEST_CASE("simulate is hash-stable across runs with identical flags") {
  TempDir dir;
  const std::string a = dir / "a";
  const std::string b = dir / "b";
  const std::vector<std::string> base = {"simulate", "--seed", "21", "--n", "25",
                                         "--d",      "4",      "--l", "10", "--k",
                                         "2",        "--quiet"};
  auto with_out = [&](const std::string& out) {
    std::vector<std::string> args = base;
    args.push_back("--out-dir");
    args.push_back(out);
    return args;
  };
  REQUIRE(cli_dispatch(with_out(a)) == 0);
  REQUIRE(cli_dispatch(with_out(b)) == 0);
  for (const std::string f : {"X.tsv", "C.tsv", "mapping.tsv", "truth.json",
                              "z_true.tsv"})
    CHECK(slurp(a + "/" + f) == slurp(b + "/" + f));
}
