#include "symphony/spd.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace symphony {

namespace {

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

std::optional<Eigen::MatrixXd> try_llt(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return Eigen::MatrixXd(llt.matrixL());
}

}  // namespace

double default_jitter_eps0(const Eigen::MatrixXd& m) {
  const double base = 1e-8 * m.trace() / std::max<Eigen::Index>(1, m.rows());
  return std::max(base, 1e-12);
}

JitterResult jitter_to_psd(const Eigen::MatrixXd& m, double eps0) {
  if (!is_symmetric(m, 1e-10)) throw DomainError("jitter_to_psd: input is not symmetric");
  if (!(eps0 > 0.0)) throw DomainError("jitter_to_psd: eps0 must be positive");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  double eps = 0.0;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    Eigen::MatrixXd shifted = sym;
    if (eps > 0.0) shifted.diagonal().array() += eps;
    if (auto L = try_llt(shifted)) {
      return JitterResult{SpdMatrix::from_psd(shifted, eps), eps};
    }
    eps = (eps == 0.0) ? eps0 : 10.0 * eps;
  }
  throw JitterBudgetExceeded("jitter_to_psd: no PSD shift within 8 escalations");
}

SpdMatrix SpdMatrix::from_psd(const Eigen::MatrixXd& m, double applied) {
  if (m.rows() != m.cols()) throw DomainError("SpdMatrix: matrix must be square");
  if (auto L = try_llt(m)) return SpdMatrix(m, *L, applied);
  throw NotPositiveDefinite("SpdMatrix: Cholesky pivot <= 0");
}

SpdMatrix SpdMatrix::from_symmetric(const Eigen::MatrixXd& m) {
  if (!is_symmetric(m, 1e-10)) throw DomainError("SpdMatrix: input is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  if (auto L = try_llt(sym)) return SpdMatrix(sym, *L, 0.0);
  // Not strictly PD; accept if the spectrum is only negative within tolerance.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const double lambda_max = es.eigenvalues().cwiseAbs().maxCoeff();
  const double lambda_min = es.eigenvalues().minCoeff();
  if (lambda_min < -1e-8 * std::max(lambda_max, 1e-300))
    throw NotPositiveDefinite("SpdMatrix: eigenvalue below tolerance; jitter first");
  return jitter_to_psd(sym, default_jitter_eps0(sym)).matrix;
}

Eigen::MatrixXd SpdMatrix::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd SpdMatrix::inverse() const {
  return solve(Eigen::MatrixXd::Identity(dim(), dim()));
}

double SpdMatrix::inv_quad_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return chol_.triangularView<Eigen::Lower>().solve(x).squaredNorm();
}

Eigen::MatrixXd cholesky(const SpdMatrix& m) { return m.chol(); }

}  // namespace symphony
