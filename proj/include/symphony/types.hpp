#pragma once

#include <Eigen/Dense>
#include <vector>

#include "symphony/errors.hpp"
#include "symphony/math.hpp"
#include "symphony/spd.hpp"

namespace symphony {

/// Problem sizes: n cells, d genes, l genomic regions, r bulk replicates,
/// K clusters (truncation level).
struct Dims {
  int n = 0;
  int d = 0;
  int l = 0;
  int r = 1;
  int K = 1;

  void validate() const {
    if (n <= 0 || d <= 0 || l <= 0 || r < 1 || K < 1)
      throw DimensionMismatch("Dims: all sizes must be positive, r >= 1, K >= 1");
  }
};

/// The two observed views. X is d x n log expression (pseudo-counted),
/// C is l x r nonnegative log peak heights.
struct Dataset {
  Eigen::MatrixXd X;  // d x n
  Eigen::MatrixXd C;  // l x r

  void validate() const {
    if (!X.allFinite() || !C.allFinite())
      throw DataError("Dataset: non-finite entries");
    if ((C.array() < 0.0).any()) throw DataError("Dataset: C entries must be >= 0");
  }
  int n() const { return static_cast<int>(X.cols()); }
  int d() const { return static_cast<int>(X.rows()); }
  int l() const { return static_cast<int>(C.rows()); }
  int r() const { return static_cast<int>(C.cols()); }
};

/// Fixed hyperparameters and empirically set hyperpriors.
struct HyperParams {
  double nu = 0.0;       // lognormal location for alpha
  double delta = 0.25;   // lognormal scale for alpha
  double omega = 0.0;    // lognormal location for beta
  double theta = 0.25;   // lognormal scale for beta
  double gamma = 0.0;    // Wishart dof for Sigma_k^{-1}; must be >= d
  double lambda = 0.1;   // edge-noise variance around the peak-driven mean
  double zeta = 0.05;    // bulk observation noise variance
  double phi = 1.0;      // stick-breaking concentration

  Eigen::VectorXd eta;          // l-vector, peak prior mean
  Eigen::VectorXd Lambda_diag;  // l-vector, peak prior variances
  Eigen::VectorXd mu2;          // d-vector, top-level mean prior
  SpdMatrix Sigma2;             // d x d, top-level covariance prior

  void validate(const Dims& dims) const {
    if (!(delta > 0) || !(theta > 0) || !(lambda > 0) || !(zeta > 0) || !(phi > 0))
      throw DomainError("HyperParams: delta, theta, lambda, zeta, phi must be > 0");
    if (gamma < dims.d) throw DofTooSmall("HyperParams: gamma must be >= d");
    if (eta.size() != dims.l || Lambda_diag.size() != dims.l)
      throw DimensionMismatch("HyperParams: eta/Lambda must have length l");
    if ((Lambda_diag.array() <= 0.0).any())
      throw DomainError("HyperParams: Lambda entries must be positive");
    if (mu2.size() != dims.d || Sigma2.dim() != dims.d)
      throw DimensionMismatch("HyperParams: mu2/Sigma2 must have dimension d");
  }

  /// Desk-scale defaults; eta/Lambda/mu2/Sigma2 get generic values that
  /// callers typically overwrite with empirical moments of the data.
  static HyperParams defaults(const Dims& dims);

  /// Fills mu2/Sigma2 from column moments of X and eta/Lambda from row
  /// moments of C (diagonalized), leaving scalar hyperparameters untouched.
  void set_empirical(const Dataset& data);
};

/// Peak-to-edge prior knowledge: mapping g(i,i') = m, motif indicator M and
/// sign matrix S. mapping(i,i') holds a region index or -1 when unmapped.
struct RegulatoryPrior {
  Eigen::MatrixXi mapping;  // d x d, region index or -1
  Eigen::MatrixXi M;        // d x d, {0,1}
  Eigen::MatrixXd S;        // d x d, {-1,0,+1}

  void validate(const Dims& dims) const {
    if (mapping.rows() != dims.d || mapping.cols() != dims.d ||
        M.rows() != dims.d || M.cols() != dims.d || S.rows() != dims.d ||
        S.cols() != dims.d)
      throw DimensionMismatch("RegulatoryPrior: matrices must be d x d");
    for (int i = 0; i < dims.d; ++i)
      for (int j = 0; j < dims.d; ++j) {
        if (M(i, j) != 0 && M(i, j) != 1)
          throw DataError("RegulatoryPrior: M entries must be 0/1");
        if (M(i, j) == 1 && mapping(i, j) < 0)
          throw MappingMissing("RegulatoryPrior: motif without mapped region");
        if (mapping(i, j) >= dims.l)
          throw UnknownRegion("RegulatoryPrior: mapping target out of range");
      }
  }

  /// Prior mean of R_k given a peak profile: S .* M .* p[g].
  Eigen::MatrixXd edge_mean(const Eigen::Ref<const Eigen::VectorXd>& p) const {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j)
        if (M(i, j) == 1) T(i, j) = S(i, j) * p[mapping(i, j)];
    return T;
  }
};

/// One full assignment of all latent variables.
struct LatentState {
  Eigen::VectorXd pi;             // K simplex
  Eigen::MatrixXd p;              // K x l, nonnegative peak profiles
  std::vector<Eigen::MatrixXd> R;  // K matrices d x d
  std::vector<SpdMatrix> Sigma;    // K covariances d x d
  Eigen::MatrixXd mu;             // d x K, cluster means as columns
  Eigen::VectorXd mu1;            // d, shared mean
  SpdMatrix Sigma1;               // d x d, shared covariance
  Eigen::VectorXd alpha;          // n, positive
  Eigen::VectorXd beta;           // n, positive
  Eigen::VectorXi z;              // n, labels in [0, K)

  void validate(const Dims& dims) const;
};

/// Row-stochastic n x K soft assignment matrix.
class Responsibilities {
 public:
  Responsibilities() = default;

  /// Normalizes each row of log-weights with log-sum-exp.
  static Responsibilities from_log_weights(const Eigen::MatrixXd& log_w);

  /// Validates that rows already sum to 1 within 1e-12.
  static Responsibilities from_probabilities(const Eigen::MatrixXd& r);

  /// One-hot rows from hard labels.
  static Responsibilities from_labels(const Eigen::VectorXi& z, int K);

  const Eigen::MatrixXd& matrix() const { return r_; }
  Eigen::Index n() const { return r_.rows(); }
  Eigen::Index K() const { return r_.cols(); }

  /// Column sums N_k.
  Eigen::VectorXd counts() const { return r_.colwise().sum(); }

  /// Row-wise argmax with ties broken toward the lowest index.
  Eigen::VectorXi hard_labels() const;

  /// Shannon entropy sum over rows.
  double entropy() const;

 private:
  explicit Responsibilities(Eigen::MatrixXd r) : r_(std::move(r)) {}
  Eigen::MatrixXd r_;
};

}  // namespace symphony
