#include "symphony/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "symphony/model.hpp"
#include "symphony/version.hpp"

namespace symphony {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& path, int line, int col) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": cannot parse '" + s + "' as a real number");
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, '\t')) out.push_back(cell);
  if (!line.empty() && line.back() == '\t') out.push_back("");
  return out;
}

void check_unique(const std::vector<std::string>& labels, const std::string& what,
                  const std::string& path) {
  std::set<std::string> seen;
  for (const auto& s : labels)
    if (!seen.insert(s).second)
      throw DuplicateLabel(path + ": duplicate " + what + " label '" + s + "'");
}

ordered_json mat_to_json(const Eigen::MatrixXd& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = data;
  return j;
}

Eigen::MatrixXd mat_from_json(const ordered_json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const std::vector<double> data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ParseError("matrix payload size does not match rows*cols");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[idx++];
  return m;
}

ordered_json vec_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_from_json(const ordered_json& j) {
  const std::vector<double> data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), data.size());
}

ordered_json ivec_to_json(const Eigen::VectorXi& v) {
  return std::vector<int>(v.data(), v.data() + v.size());
}

Eigen::VectorXi ivec_from_json(const ordered_json& j) {
  const std::vector<int> data = j.get<std::vector<int>>();
  return Eigen::Map<const Eigen::VectorXi>(data.data(), data.size());
}

ordered_json imat_to_json(const Eigen::MatrixXi& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<int> data;
  data.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = data;
  return j;
}

Eigen::MatrixXi imat_from_json(const ordered_json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const std::vector<int> data = j.at("data").get<std::vector<int>>();
  Eigen::MatrixXi m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[idx++];
  return m;
}

ordered_json dims_to_json(const Dims& d) {
  ordered_json j;
  j["n"] = d.n;
  j["d"] = d.d;
  j["l"] = d.l;
  j["r"] = d.r;
  j["K"] = d.K;
  return j;
}

Dims dims_from_json(const ordered_json& j) {
  Dims d;
  d.n = j.at("n").get<int>();
  d.d = j.at("d").get<int>();
  d.l = j.at("l").get<int>();
  d.r = j.at("r").get<int>();
  d.K = j.at("K").get<int>();
  return d;
}

ordered_json hp_to_json(const HyperParams& hp) {
  ordered_json j;
  j["nu"] = hp.nu;
  j["delta"] = hp.delta;
  j["omega"] = hp.omega;
  j["theta"] = hp.theta;
  j["gamma"] = hp.gamma;
  j["lambda"] = hp.lambda;
  j["zeta"] = hp.zeta;
  j["phi"] = hp.phi;
  j["eta"] = vec_to_json(hp.eta);
  j["lambda_diag"] = vec_to_json(hp.Lambda_diag);
  j["mu2"] = vec_to_json(hp.mu2);
  j["sigma2"] = mat_to_json(hp.Sigma2.matrix());
  return j;
}

HyperParams hp_from_json(const ordered_json& j) {
  HyperParams hp;
  hp.nu = j.at("nu").get<double>();
  hp.delta = j.at("delta").get<double>();
  hp.omega = j.at("omega").get<double>();
  hp.theta = j.at("theta").get<double>();
  hp.gamma = j.at("gamma").get<double>();
  hp.lambda = j.at("lambda").get<double>();
  hp.zeta = j.at("zeta").get<double>();
  hp.phi = j.at("phi").get<double>();
  hp.eta = vec_from_json(j.at("eta"));
  hp.Lambda_diag = vec_from_json(j.at("lambda_diag"));
  hp.mu2 = vec_from_json(j.at("mu2"));
  hp.Sigma2 = SpdMatrix::from_symmetric(mat_from_json(j.at("sigma2")));
  return hp;
}

ordered_json state_to_json(const LatentState& st) {
  ordered_json j;
  j["pi"] = vec_to_json(st.pi);
  j["p"] = mat_to_json(st.p);
  ordered_json r_list = ordered_json::array();
  for (const auto& Rk : st.R) r_list.push_back(mat_to_json(Rk));
  j["R"] = r_list;
  ordered_json s_list = ordered_json::array();
  for (const auto& Sk : st.Sigma) s_list.push_back(mat_to_json(Sk.matrix()));
  j["sigma"] = s_list;
  j["mu"] = mat_to_json(st.mu);
  j["mu1"] = vec_to_json(st.mu1);
  j["sigma1"] = mat_to_json(st.Sigma1.matrix());
  j["alpha"] = vec_to_json(st.alpha);
  j["beta"] = vec_to_json(st.beta);
  j["z"] = ivec_to_json(st.z);
  return j;
}

LatentState state_from_json(const ordered_json& j) {
  LatentState st;
  st.pi = vec_from_json(j.at("pi"));
  st.p = mat_from_json(j.at("p"));
  for (const auto& item : j.at("R")) st.R.push_back(mat_from_json(item));
  for (const auto& item : j.at("sigma"))
    st.Sigma.push_back(SpdMatrix::from_symmetric(mat_from_json(item)));
  st.mu = mat_from_json(j.at("mu"));
  st.mu1 = vec_from_json(j.at("mu1"));
  st.Sigma1 = SpdMatrix::from_symmetric(mat_from_json(j.at("sigma1")));
  st.alpha = vec_from_json(j.at("alpha"));
  st.beta = vec_from_json(j.at("beta"));
  st.z = ivec_from_json(j.at("z"));
  return st;
}

ordered_json report_to_json(const FitReport& rep) {
  ordered_json j;
  j["elbo_trace"] = rep.elbo_trace;
  j["converged"] = rep.converged;
  j["iterations_run"] = rep.iterations_run;
  j["jitter_events"] = rep.jitter_events;
  j["line_search_failures"] = rep.line_search_failures;
  j["guard_rejections"] = rep.guard_rejections;
  j["identifiability_fraction"] = rep.identifiability_fraction;
  j["notes"] = rep.notes;
  return j;
}

FitReport report_from_json(const ordered_json& j) {
  FitReport rep;
  rep.elbo_trace = j.at("elbo_trace").get<std::vector<double>>();
  rep.converged = j.at("converged").get<bool>();
  rep.iterations_run = j.at("iterations_run").get<int>();
  rep.jitter_events = j.at("jitter_events").get<int>();
  rep.line_search_failures = j.at("line_search_failures").get<int>();
  rep.guard_rejections = j.at("guard_rejections").get<int>();
  rep.identifiability_fraction = j.at("identifiability_fraction").get<double>();
  rep.notes = j.at("notes").get<std::vector<std::string>>();
  return rep;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

MatrixFile read_matrix_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  MatrixFile mf;
  mf.path = path;
  std::string line;
  int lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_tabs(line);
    if (lineno == 1) {
      if (cells.size() < 2)
        throw ParseError(path + ":1: header needs at least one column label");
      mf.orientation = cells[0];
      mf.col_labels.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != mf.col_labels.size() + 1)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(mf.col_labels.size() + 1) + " columns, got " +
                       std::to_string(cells.size()));
    mf.row_labels.push_back(cells[0]);
    std::vector<double> vals;
    vals.reserve(cells.size() - 1);
    for (size_t c = 1; c < cells.size(); ++c)
      vals.push_back(parse_double(cells[c], path, lineno, static_cast<int>(c + 1)));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  check_unique(mf.row_labels, "row", path);
  check_unique(mf.col_labels, "column", path);
  mf.values.resize(rows.size(), mf.col_labels.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t c = 0; c < rows[i].size(); ++c) mf.values(i, c) = rows[i][c];
  return mf;
}

void write_matrix_tsv(const std::string& path, const std::string& orientation,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels,
                      const Eigen::Ref<const Eigen::MatrixXd>& values) {
  if (values.rows() != static_cast<Eigen::Index>(row_labels.size()) ||
      values.cols() != static_cast<Eigen::Index>(col_labels.size()))
    throw ShapeMismatch("write_matrix_tsv: labels do not match matrix shape");
  std::string out = orientation;
  for (const auto& c : col_labels) out += "\t" + c;
  out += "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out += row_labels[i];
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      out += "\t" + format_double(values(i, c));
    out += "\n";
  }
  write_text_file(path, out);
}

MappingFile read_mapping_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  MappingFile mf;
  std::string line;
  int lineno = 0;
  size_t ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_tabs(line);
    if (lineno == 1) {
      if (cells.size() != 4 && cells.size() != 5)
        throw ParseError(path + ":1: mapping header needs 4 or 5 columns");
      ncols = cells.size();
      mf.has_sign = ncols == 5;
      continue;
    }
    if (cells.size() != ncols)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ncols) + " columns");
    MappingRow row;
    row.region = cells[0];
    row.target = cells[1];
    row.regulator = cells[2];
    const double motif = parse_double(cells[3], path, lineno, 4);
    if (motif != 0.0 && motif != 1.0)
      throw ParseError(path + ":" + std::to_string(lineno) + ": motif flag must be 0 or 1");
    row.motif = static_cast<int>(motif);
    if (mf.has_sign) {
      const double s = parse_double(cells[4], path, lineno, 5);
      if (s != -1.0 && s != 0.0 && s != 1.0)
        throw ParseError(path + ":" + std::to_string(lineno) + ": sign must be -1, 0 or 1");
      row.sign = s;
    }
    mf.rows.push_back(std::move(row));
  }
  return mf;
}

void write_mapping_tsv(const std::string& path, const RegulatoryPrior& prior,
                       const std::vector<std::string>& gene_labels,
                       const std::vector<std::string>& region_labels) {
  std::string out = "region_id\ttarget_gene\tregulator_gene\tmotif\tsign\n";
  for (Eigen::Index i = 0; i < prior.M.rows(); ++i)
    for (Eigen::Index j = 0; j < prior.M.cols(); ++j) {
      if (prior.M(i, j) != 1) continue;
      out += region_labels[prior.mapping(i, j)] + "\t" + gene_labels[i] + "\t" +
             gene_labels[j] + "\t1\t" + format_double(prior.S(i, j)) + "\n";
    }
  write_text_file(path, out);
}

LoadedDataset load_dataset(const std::string& expr_path, const std::string& bulk_path,
                           bool raw_counts, bool raw_peaks) {
  const MatrixFile expr = read_matrix_tsv(expr_path);
  const MatrixFile bulk = read_matrix_tsv(bulk_path);
  LoadedDataset ds;
  ds.gene_labels = expr.row_labels;
  ds.cell_labels = expr.col_labels;
  ds.region_labels = bulk.row_labels;
  ds.replicate_labels = bulk.col_labels;
  ds.data.X = expr.values;
  ds.data.C = bulk.values;
  if (raw_counts) ds.data.X = (ds.data.X.array() + 1.0).log();
  if (raw_peaks) ds.data.C = (ds.data.C.array() + 1.0).log();
  ds.data.validate();
  return ds;
}

RegulatoryPrior load_regulatory_prior(const std::string& mapping_path,
                                      const LoadedDataset& ds) {
  const MappingFile mf = read_mapping_tsv(mapping_path);
  const int d = ds.data.d();
  std::map<std::string, int> gene_index;
  for (size_t i = 0; i < ds.gene_labels.size(); ++i)
    gene_index[ds.gene_labels[i]] = static_cast<int>(i);
  std::map<std::string, int> region_index;
  for (size_t m = 0; m < ds.region_labels.size(); ++m)
    region_index[ds.region_labels[m]] = static_cast<int>(m);

  RegulatoryPrior prior;
  prior.mapping = Eigen::MatrixXi::Constant(d, d, -1);
  prior.M = Eigen::MatrixXi::Zero(d, d);
  prior.S = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd empirical;
  if (!mf.has_sign) empirical = build_sign_matrix(ds.data.X);

  std::set<std::pair<int, int>> seen;
  for (const auto& row : mf.rows) {
    const auto git = gene_index.find(row.target);
    if (git == gene_index.end())
      throw DimensionMismatch("mapping: unknown gene label '" + row.target + "'");
    const auto rit = gene_index.find(row.regulator);
    if (rit == gene_index.end())
      throw DimensionMismatch("mapping: unknown gene label '" + row.regulator + "'");
    const auto mit = region_index.find(row.region);
    if (mit == region_index.end())
      throw UnknownRegion("mapping: unknown region id '" + row.region + "'");
    const int i = git->second;
    const int j = rit->second;
    if (!seen.insert({i, j}).second)
      throw DuplicateLabel("mapping: duplicate pair (" + row.target + ", " +
                           row.regulator + ")");
    prior.mapping(i, j) = mit->second;
    prior.M(i, j) = row.motif;
    if (prior.M(i, j) == 1)
      prior.S(i, j) = row.sign ? *row.sign : empirical(i, j);
  }
  return prior;
}

void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  ordered_json j;
  j["schema_version"] = ck.schema_version;
  j["tool_version"] = ck.tool_version.empty() ? kToolVersion : ck.tool_version;
  ordered_json prov;
  prov["seed"] = ck.seed;
  prov["config_hash"] = ck.config_hash;
  j["provenance"] = prov;
  j["dims"] = dims_to_json(ck.dims);
  j["hyperparams"] = hp_to_json(ck.hp);
  j["state"] = state_to_json(ck.state);
  j["report"] = report_to_json(ck.report);
  write_text_file(path, j.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  Checkpoint ck;
  try {
    ck.schema_version = j.at("schema_version").get<int>();
    if (ck.schema_version > kCheckpointSchemaVersion)
      throw ParseError(path + ": checkpoint schema version " +
                       std::to_string(ck.schema_version) + " is newer than this tool");
    ck.tool_version = j.at("tool_version").get<std::string>();
    ck.seed = j.at("provenance").at("seed").get<std::uint64_t>();
    ck.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    ck.dims = dims_from_json(j.at("dims"));
    ck.hp = hp_from_json(j.at("hyperparams"));
    ck.state = state_from_json(j.at("state"));
    ck.report = report_from_json(j.at("report"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": malformed checkpoint: " + e.what());
  }
  return ck;
}

void write_ground_truth(const std::string& path, const GroundTruth& gt) {
  ordered_json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["seed"] = gt.seed;
  j["dims"] = dims_to_json(gt.dims);
  j["hyperparams"] = hp_to_json(gt.hp);
  j["state"] = state_to_json(gt.state);
  ordered_json prior;
  prior["mapping"] = imat_to_json(gt.prior.mapping);
  prior["M"] = imat_to_json(gt.prior.M);
  prior["S"] = mat_to_json(gt.prior.S);
  j["prior"] = prior;
  write_text_file(path, j.dump(2) + "\n");
}

GroundTruth read_ground_truth(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  GroundTruth gt;
  try {
    gt.seed = j.at("seed").get<std::uint64_t>();
    gt.dims = dims_from_json(j.at("dims"));
    gt.hp = hp_from_json(j.at("hyperparams"));
    gt.state = state_from_json(j.at("state"));
    gt.prior.mapping = imat_from_json(j.at("prior").at("mapping"));
    gt.prior.M = imat_from_json(j.at("prior").at("M"));
    gt.prior.S = mat_from_json(j.at("prior").at("S"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": malformed ground truth: " + e.what());
  }
  return gt;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::map<std::string, std::string> cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
    cfg[key] = value;
  }
  return cfg;
}

std::string config_hash(const std::map<std::string, std::string>& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&](const std::string& s) {
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [k, v] : cfg) {
    mix(k);
    mix("=");
    mix(v);
    mix("\n");
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

Eigen::VectorXi read_labels_tsv(const std::string& path,
                                const std::vector<std::string>& cell_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::map<std::string, int> cell_index;
  for (size_t i = 0; i < cell_labels.size(); ++i)
    cell_index[cell_labels[i]] = static_cast<int>(i);
  Eigen::VectorXi z = Eigen::VectorXi::Constant(cell_labels.size(), -1);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) continue;  // header
    const std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != 2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected cell\tcluster");
    const auto it = cell_index.find(cells[0]);
    if (it == cell_index.end())
      throw DimensionMismatch("labels: unknown cell label '" + cells[0] + "'");
    const double v = parse_double(cells[1], path, lineno, 2);
    if (v < 0 || v != std::floor(v))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": cluster must be a nonnegative integer");
    z[it->second] = static_cast<int>(v);
  }
  for (Eigen::Index j = 0; j < z.size(); ++j)
    if (z[j] < 0)
      throw DimensionMismatch("labels: no cluster given for cell '" + cell_labels[j] + "'");
  return z;
}

void write_labels_tsv(const std::string& path, const std::vector<std::string>& cell_labels,
                      const Eigen::VectorXi& z) {
  std::string out = "cell\tcluster\n";
  for (Eigen::Index j = 0; j < z.size(); ++j)
    out += cell_labels[j] + "\t" + std::to_string(z[j]) + "\n";
  write_text_file(path, out);
}

}  // namespace symphony
