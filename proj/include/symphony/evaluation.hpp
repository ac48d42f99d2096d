#pragma once

#include <cstdint>
#include <vector>

#include "symphony/types.hpp"

namespace symphony {

/// Pairwise F-measure over same-cluster point pairs. Invariant to label
/// permutation on either side. Degenerate sides (no same-cluster pairs)
/// contribute precision/recall 1 by convention.
double f_score_clustering(const Eigen::VectorXi& inferred, const Eigen::VectorXi& truth);

/// Matched per-cluster F variant: clusters are aligned by best overlap and
/// per-truth-cluster F scores are averaged with size weights. Emitted next
/// to the pairwise score since either reading of "F-score" is defensible.
double f_score_matched(const Eigen::VectorXi& inferred, const Eigen::VectorXi& truth);

/// Bijection between inferred and truth cluster ids plus the contingency
/// counts that produced it.
struct ClusterAlignment {
  std::vector<int> perm;  // inferred id -> truth id
  Eigen::MatrixXi contingency;
};

ClusterAlignment align_clusters_by_overlap(const Eigen::VectorXi& inferred,
                                           const Eigen::VectorXi& truth);

/// Root-mean-square error between K x l profile matrices after the
/// error-minimizing cluster permutation (exhaustive for K <= 8).
double rmse_peaks(const Eigen::Ref<const Eigen::MatrixXd>& inferred,
                  const Eigen::Ref<const Eigen::MatrixXd>& truth);

/// Cell-wise normalization y_j = x_j / beta_j + (1 - alpha_j / beta_j) mu_{z_j};
/// undoes the per-cell technical scalings given the fitted state.
Eigen::MatrixXd normalize_cells(const Dataset& data, const LatentState& state);

struct WeightedSumCheck {
  double correlation = 0.0;
  Eigen::MatrixXd table;  // l x 2: bulk row-mean, mixed profile
};

/// Pearson correlation between the observed bulk (row-mean of C) and the
/// pi-weighted sum of profiles, plus the per-region scatter pairs.
WeightedSumCheck weighted_sum_check(const Eigen::Ref<const Eigen::MatrixXd>& C,
                                    const Eigen::Ref<const Eigen::MatrixXd>& p_hat,
                                    const Eigen::Ref<const Eigen::VectorXd>& pi);

struct GrnEdge {
  int cluster = 0;
  int regulator = 0;  // column index i' (source)
  int target = 0;     // row index i
  double weight = 0.0;
  double sign = 0.0;
  double covariance = 0.0;
  double weight_z = 0.0;
  double covariance_z = 0.0;
};

struct GrnExport {
  std::vector<GrnEdge> edges;
  double tau = 0.0;
};

/// Edges with |R_k[i,i']| >= tau, annotated with the matching covariance
/// entry and z-score-normalized columns.
GrnExport export_grn(const LatentState& state, double tau);

/// Lloyd iterations with k-means++ seeding over the columns of X;
/// deterministic given the seed. Optionally records the inertia trace.
Eigen::VectorXi baseline_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& X, int K,
                                std::uint64_t seed,
                                std::vector<double>* inertia_trace = nullptr);

struct NmfResult {
  Eigen::MatrixXd W;  // l x K profiles (scale-folded)
  Eigen::VectorXd h;  // K mixing weights, sums to 1
  std::vector<double> objective_trace;
};

/// Multiplicative-update NMF of the nonnegative bulk matrix; the Frobenius
/// objective trace is non-increasing.
NmfResult baseline_nmf_deconvolve(const Eigen::Ref<const Eigen::MatrixXd>& C, int K,
                                  int iters, std::uint64_t seed);

double pearson_correlation(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace symphony
