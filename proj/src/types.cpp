#include "symphony/types.hpp"

#include <cmath>

namespace symphony {

HyperParams HyperParams::defaults(const Dims& dims) {
  HyperParams hp;
  hp.gamma = dims.d + 2;
  hp.eta = Eigen::VectorXd::Constant(dims.l, 2.0);
  hp.Lambda_diag = Eigen::VectorXd::Ones(dims.l);
  hp.mu2 = Eigen::VectorXd::Zero(dims.d);
  hp.Sigma2 = SpdMatrix::from_psd(Eigen::MatrixXd::Identity(dims.d, dims.d));
  return hp;
}

void HyperParams::set_empirical(const Dataset& data) {
  const int d = data.d();
  const int n = data.n();
  mu2 = data.X.rowwise().mean();
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd c = data.X.col(j) - mu2;
    var += c.cwiseProduct(c);
  }
  var /= std::max(1, n - 1);
  var = var.cwiseMax(1e-8);
  Sigma2 = SpdMatrix::from_psd(var.asDiagonal());

  eta = data.C.rowwise().mean();
  const int r = data.r();
  if (r > 1) {
    Eigen::VectorXd cv = Eigen::VectorXd::Zero(data.l());
    for (int t = 0; t < r; ++t) {
      const Eigen::VectorXd c = data.C.col(t) - eta;
      cv += c.cwiseProduct(c);
    }
    Lambda_diag = (cv / (r - 1)).cwiseMax(1e-4);
  } else {
    // One replicate carries no spread information; fall back to the
    // across-region variance as a scale guess.
    const double m = eta.mean();
    const double v = (eta.array() - m).square().sum() / std::max(1, data.l() - 1);
    Lambda_diag = Eigen::VectorXd::Constant(data.l(), std::max(v, 1e-4));
  }
}

void LatentState::validate(const Dims& dims) const {
  if (pi.size() != dims.K || std::abs(pi.sum() - 1.0) > 1e-8 || (pi.array() < 0).any())
    throw DomainError("LatentState: pi must be a K-simplex");
  if (p.rows() != dims.K || p.cols() != dims.l || (p.array() < 0).any())
    throw DomainError("LatentState: p must be K x l and nonnegative");
  if (static_cast<int>(R.size()) != dims.K || static_cast<int>(Sigma.size()) != dims.K)
    throw DimensionMismatch("LatentState: need K network/covariance blocks");
  for (const auto& Rk : R)
    if (Rk.rows() != dims.d || Rk.cols() != dims.d)
      throw DimensionMismatch("LatentState: R_k must be d x d");
  for (const auto& Sk : Sigma)
    if (Sk.dim() != dims.d) throw DimensionMismatch("LatentState: Sigma_k must be d x d");
  if (mu.rows() != dims.d || mu.cols() != dims.K)
    throw DimensionMismatch("LatentState: mu must be d x K");
  if (mu1.size() != dims.d || Sigma1.dim() != dims.d)
    throw DimensionMismatch("LatentState: mu'/Sigma' must have dimension d");
  if (alpha.size() != dims.n || beta.size() != dims.n)
    throw DimensionMismatch("LatentState: alpha/beta must have length n");
  if ((alpha.array() <= 0).any() || (beta.array() <= 0).any())
    throw DomainError("LatentState: alpha/beta must be positive");
  if (z.size() != dims.n || (z.array() < 0).any() || (z.array() >= dims.K).any())
    throw DomainError("LatentState: labels out of range");
}

Responsibilities Responsibilities::from_log_weights(const Eigen::MatrixXd& log_w) {
  Eigen::MatrixXd r(log_w.rows(), log_w.cols());
  for (Eigen::Index j = 0; j < log_w.rows(); ++j) {
    const double lse = log_sum_exp(log_w.row(j).transpose());
    r.row(j) = (log_w.row(j).array() - lse).exp();
    r.row(j) /= r.row(j).sum();  // exact renormalization
  }
  return Responsibilities(std::move(r));
}

Responsibilities Responsibilities::from_probabilities(const Eigen::MatrixXd& r) {
  for (Eigen::Index j = 0; j < r.rows(); ++j) {
    if ((r.row(j).array() < 0).any() || std::abs(r.row(j).sum() - 1.0) > 1e-12)
      throw DomainError("Responsibilities: row does not sum to 1");
  }
  return Responsibilities(r);
}

Responsibilities Responsibilities::from_labels(const Eigen::VectorXi& z, int K) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(z.size(), K);
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (z[j] < 0 || z[j] >= K) throw DomainError("Responsibilities: label out of range");
    r(j, z[j]) = 1.0;
  }
  return Responsibilities(std::move(r));
}

Eigen::VectorXi Responsibilities::hard_labels() const {
  Eigen::VectorXi z(r_.rows());
  for (Eigen::Index j = 0; j < r_.rows(); ++j) {
    int best = 0;
    for (Eigen::Index k = 1; k < r_.cols(); ++k)
      if (r_(j, k) > r_(j, best)) best = static_cast<int>(k);
    z[j] = best;
  }
  return z;
}

double Responsibilities::entropy() const {
  double h = 0.0;
  for (Eigen::Index j = 0; j < r_.rows(); ++j)
    for (Eigen::Index k = 0; k < r_.cols(); ++k) {
      const double v = r_(j, k);
      if (v > 0.0) h -= v * std::log(v);
    }
  return h;
}

}  // namespace symphony
