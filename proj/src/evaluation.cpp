#include "symphony/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "symphony/rng.hpp"

namespace symphony {

namespace {

Eigen::MatrixXi contingency_table(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  const int Ka = a.size() > 0 ? a.maxCoeff() + 1 : 1;
  const int Kb = b.size() > 0 ? b.maxCoeff() + 1 : 1;
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(Ka, Kb);
  for (Eigen::Index j = 0; j < a.size(); ++j) table(a[j], b[j]) += 1;
  return table;
}

double choose2(double m) { return 0.5 * m * (m - 1.0); }

/// Exhaustive assignment minimizing total cost for square tables up to 8;
/// greedy row-by-row beyond that.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int K = static_cast<int>(cost.rows());
  std::vector<int> perm(K);
  if (K <= 8) {
    std::vector<int> ids(K);
    std::iota(ids.begin(), ids.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> trial = ids;
    do {
      double total = 0.0;
      for (int i = 0; i < K; ++i) total += cost(i, trial[i]);
      if (total < best) {
        best = total;
        perm = trial;
      }
    } while (std::next_permutation(trial.begin(), trial.end()));
    return perm;
  }
  std::vector<bool> used(K, false);
  for (int i = 0; i < K; ++i) {
    int pick = -1;
    for (int t = 0; t < K; ++t)
      if (!used[t] && (pick < 0 || cost(i, t) < cost(i, pick))) pick = t;
    used[pick] = true;
    perm[i] = pick;
  }
  return perm;
}

}  // namespace

double f_score_clustering(const Eigen::VectorXi& inferred, const Eigen::VectorXi& truth) {
  if (inferred.size() != truth.size())
    throw LengthMismatch("f_score_clustering: label vectors differ in length");
  const Eigen::MatrixXi table = contingency_table(inferred, truth);
  double ss = 0.0;
  for (int i = 0; i < table.rows(); ++i)
    for (int j = 0; j < table.cols(); ++j) ss += choose2(table(i, j));
  double same_pred = 0.0;
  for (int i = 0; i < table.rows(); ++i) same_pred += choose2(table.row(i).sum());
  double same_true = 0.0;
  for (int j = 0; j < table.cols(); ++j) same_true += choose2(table.col(j).sum());
  const double precision = same_pred > 0.0 ? ss / same_pred : 1.0;
  const double recall = same_true > 0.0 ? ss / same_true : 1.0;
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

ClusterAlignment align_clusters_by_overlap(const Eigen::VectorXi& inferred,
                                           const Eigen::VectorXi& truth) {
  if (inferred.size() != truth.size())
    throw LengthMismatch("align_clusters_by_overlap: label vectors differ in length");
  Eigen::MatrixXi table = contingency_table(inferred, truth);
  const int K = static_cast<int>(std::max(table.rows(), table.cols()));
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(K, K);
  cost.topLeftCorner(table.rows(), table.cols()) = -table.cast<double>();
  ClusterAlignment align;
  align.contingency = table;
  align.perm = min_cost_assignment(cost);
  align.perm.resize(table.rows());
  return align;
}

double f_score_matched(const Eigen::VectorXi& inferred, const Eigen::VectorXi& truth) {
  const ClusterAlignment align = align_clusters_by_overlap(inferred, truth);
  const Eigen::MatrixXi& table = align.contingency;
  const double n = static_cast<double>(inferred.size());
  if (n <= 0.0) return 0.0;
  double f = 0.0;
  for (int i = 0; i < table.rows(); ++i) {
    const int t = align.perm[i];
    if (t >= table.cols()) continue;
    const double overlap = table(i, t);
    const double denom = table.row(i).sum() + table.col(t).sum();
    if (denom > 0.0) f += (table.col(t).sum() / n) * (2.0 * overlap / denom);
  }
  return f;
}

double rmse_peaks(const Eigen::Ref<const Eigen::MatrixXd>& inferred,
                  const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  if (inferred.rows() != truth.rows() || inferred.cols() != truth.cols())
    throw ShapeMismatch("rmse_peaks: profile matrices differ in shape");
  const int K = static_cast<int>(inferred.rows());
  Eigen::MatrixXd cost(K, K);
  for (int i = 0; i < K; ++i)
    for (int t = 0; t < K; ++t)
      cost(i, t) = (inferred.row(i) - truth.row(t)).squaredNorm();
  const std::vector<int> perm = min_cost_assignment(cost);
  double total = 0.0;
  for (int i = 0; i < K; ++i) total += cost(i, perm[i]);
  return std::sqrt(total / static_cast<double>(inferred.size()));
}

Eigen::MatrixXd normalize_cells(const Dataset& data, const LatentState& state) {
  const int n = data.n();
  Eigen::MatrixXd Y(data.d(), n);
  for (int j = 0; j < n; ++j) {
    const double a = state.alpha[j];
    const double b = state.beta[j];
    Y.col(j) = data.X.col(j) / b + (1.0 - a / b) * state.mu.col(state.z[j]);
  }
  return Y;
}

double pearson_correlation(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw LengthMismatch("pearson_correlation: length mismatch");
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd ca = a.array() - ma;
  const Eigen::ArrayXd cb = b.array() - mb;
  const double denom = std::sqrt(ca.square().sum() * cb.square().sum());
  if (!(denom > 0.0)) return 0.0;
  return (ca * cb).sum() / denom;
}

WeightedSumCheck weighted_sum_check(const Eigen::Ref<const Eigen::MatrixXd>& C,
                                    const Eigen::Ref<const Eigen::MatrixXd>& p_hat,
                                    const Eigen::Ref<const Eigen::VectorXd>& pi) {
  if (p_hat.rows() != pi.size() || p_hat.cols() != C.rows())
    throw ShapeMismatch("weighted_sum_check: shapes inconsistent");
  WeightedSumCheck out;
  const Eigen::VectorXd cbar = C.rowwise().mean();
  const Eigen::VectorXd mix = p_hat.transpose() * pi;
  out.table.resize(C.rows(), 2);
  out.table.col(0) = cbar;
  out.table.col(1) = mix;
  out.correlation = pearson_correlation(cbar, mix);
  return out;
}

GrnExport export_grn(const LatentState& state, double tau) {
  if (tau < 0.0) throw DomainError("export_grn: threshold must be >= 0");
  GrnExport out;
  out.tau = tau;
  const int K = static_cast<int>(state.pi.size());
  const int d = static_cast<int>(state.mu.rows());
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double w = state.R[k](i, j);
        if (std::abs(w) < tau) continue;
        GrnEdge e;
        e.cluster = k;
        e.target = i;
        e.regulator = j;
        e.weight = w;
        e.sign = w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0);
        e.covariance = state.Sigma[k].matrix()(i, j);
        out.edges.push_back(e);
      }
  // z-score normalization across the exported set
  if (out.edges.size() >= 2) {
    double mw = 0.0, mc = 0.0;
    for (const auto& e : out.edges) {
      mw += e.weight;
      mc += e.covariance;
    }
    mw /= out.edges.size();
    mc /= out.edges.size();
    double vw = 0.0, vc = 0.0;
    for (const auto& e : out.edges) {
      vw += (e.weight - mw) * (e.weight - mw);
      vc += (e.covariance - mc) * (e.covariance - mc);
    }
    const double sw = std::sqrt(vw / (out.edges.size() - 1));
    const double sc = std::sqrt(vc / (out.edges.size() - 1));
    for (auto& e : out.edges) {
      e.weight_z = sw > 0 ? (e.weight - mw) / sw : 0.0;
      e.covariance_z = sc > 0 ? (e.covariance - mc) / sc : 0.0;
    }
  }
  return out;
}

Eigen::VectorXi baseline_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& X, int K,
                                std::uint64_t seed, std::vector<double>* inertia_trace) {
  const int n = static_cast<int>(X.cols());
  const int d = static_cast<int>(X.rows());
  if (K > n) throw DomainError("baseline_kmeans: K must not exceed the cell count");
  RngStream rng(seed, 707);

  // k-means++ seeding
  Eigen::MatrixXd centers(d, K);
  std::vector<int> chosen;
  {
    const int first = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
    centers.col(0) = X.col(first);
    chosen.push_back(first);
    Eigen::VectorXd dist2(n);
    for (int j = 0; j < n; ++j) dist2[j] = (X.col(j) - centers.col(0)).squaredNorm();
    for (int k = 1; k < K; ++k) {
      const double total = dist2.sum();
      int pick = -1;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          acc += dist2[j];
          if (acc >= target) {
            pick = j;
            break;
          }
        }
        if (pick < 0) pick = n - 1;
      } else {
        // all remaining distances zero: take the first unused index
        for (int j = 0; j < n; ++j)
          if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) {
            pick = j;
            break;
          }
        if (pick < 0) pick = 0;
      }
      centers.col(k) = X.col(pick);
      chosen.push_back(pick);
      for (int j = 0; j < n; ++j)
        dist2[j] = std::min(dist2[j], (X.col(j) - centers.col(k)).squaredNorm());
    }
  }

  Eigen::VectorXi labels = Eigen::VectorXi::Zero(n);
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (int j = 0; j < n; ++j) {
      int best = 0;
      double best_d = (X.col(j) - centers.col(0)).squaredNorm();
      for (int k = 1; k < K; ++k) {
        const double dd = (X.col(j) - centers.col(k)).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = k;
        }
      }
      inertia += best_d;
      if (labels[j] != best) {
        labels[j] = best;
        changed = true;
      }
    }
    if (inertia_trace) inertia_trace->push_back(inertia);
    // centroid update
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, K);
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(K);
    for (int j = 0; j < n; ++j) {
      sums.col(labels[j]) += X.col(j);
      cnt[labels[j]] += 1.0;
    }
    for (int k = 0; k < K; ++k) {
      if (cnt[k] > 0.0) {
        centers.col(k) = sums.col(k) / cnt[k];
      } else {
        // reseed an empty cluster at the point farthest from its center
        int far = 0;
        double far_d = -1.0;
        for (int j = 0; j < n; ++j) {
          const double dd = (X.col(j) - centers.col(labels[j])).squaredNorm();
          if (dd > far_d) {
            far_d = dd;
            far = j;
          }
        }
        centers.col(k) = X.col(far);
      }
    }
    if (!changed && iter > 0) break;
  }
  return labels;
}

NmfResult baseline_nmf_deconvolve(const Eigen::Ref<const Eigen::MatrixXd>& C, int K,
                                  int iters, std::uint64_t seed) {
  if ((C.array() < 0.0).any())
    throw DomainError("baseline_nmf_deconvolve: C must be nonnegative");
  const int l = static_cast<int>(C.rows());
  const int r = static_cast<int>(C.cols());
  RngStream rng(seed, 909);
  const double scale = std::sqrt(std::max(C.mean(), 1e-8) / std::max(K, 1));
  Eigen::MatrixXd W(l, K), H(K, r);
  for (int i = 0; i < l; ++i)
    for (int k = 0; k < K; ++k) W(i, k) = scale * (0.5 + rng.uniform());
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < r; ++t) H(k, t) = scale * (0.5 + rng.uniform());

  NmfResult out;
  const double eps = 1e-12;
  out.objective_trace.push_back(0.5 * (C - W * H).squaredNorm());
  for (int it = 0; it < iters; ++it) {
    W  = W.cwiseProduct((C * H.transpose()).cwiseQuotient(
        (W * (H * H.transpose())).cwiseMax(eps)));
    H = H.cwiseProduct((W.transpose() * C).cwiseQuotient(
        ((W.transpose() * W) * H).cwiseMax(eps)));
    out.objective_trace.push_back(0.5 * (C - W * H).squaredNorm());
  }
  // Weights are the replicate-average rows of H normalized to a simplex;
  // profiles are rescaled so that sum_k h_k W_k reproduces the fitted bulk.
  const Eigen::VectorXd s = H.rowwise().mean();
  const double total = s.sum();
  if (total > 0.0) {
    out.h = s / total;
    out.W = W * total;
  } else {
    out.h = Eigen::VectorXd::Constant(K, 1.0 / K);
    out.W = W;
  }
  return out;
}

}  // namespace symphony
