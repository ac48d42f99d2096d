#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>

#include "symphony/errors.hpp"

namespace symphony {

/// Symmetric positive (semi-)definite matrix with an eagerly cached Cholesky
/// factor. Construction goes through the factories below; a successfully
/// built SpdMatrix always carries a valid factor, so downstream solves and
/// log-determinants never re-factorize.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  /// Validates symmetry and (near-)positive-definiteness. Inputs whose
  /// smallest eigenvalue is within -1e-8 * |lambda_max| are accepted and
  /// nudged by the minimal diagonal shift that lets Cholesky succeed.
  static SpdMatrix from_symmetric(const Eigen::MatrixXd& m);

  /// Wraps a matrix already known to be SPD (e.g. Gram products); throws
  /// NotPositiveDefinite if the factorization fails outright. `applied`
  /// records a diagonal shift the caller already folded into m.
  static SpdMatrix from_psd(const Eigen::MatrixXd& m, double applied = 0.0);

  Eigen::Index dim() const { return values_.rows(); }
  const Eigen::MatrixXd& matrix() const { return values_; }

  /// Lower-triangular factor L with L * L^T == matrix().
  const Eigen::MatrixXd& chol() const { return chol_; }

  double log_det() const { return 2.0 * chol_.diagonal().array().log().sum(); }

  /// Solves matrix() * X = B through the cached factor; B may be a vector.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  Eigen::MatrixXd inverse() const;

  /// x^T matrix()^{-1} x via one triangular solve.
  double inv_quad_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  double trace() const { return values_.trace(); }

  /// Diagonal shift that was applied at construction (0 for clean inputs).
  double applied_jitter() const { return jitter_; }

 private:
  SpdMatrix(Eigen::MatrixXd values, Eigen::MatrixXd chol, double jitter)
      : values_(std::move(values)), chol_(std::move(chol)), jitter_(jitter) {}

  Eigen::MatrixXd values_;
  Eigen::MatrixXd chol_;
  double jitter_ = 0.0;
};

/// Cholesky factor of an SPD matrix; L * L^T reproduces the input to 1e-8
/// relative. Callers holding raw symmetric matrices should jitter first.
Eigen::MatrixXd cholesky(const SpdMatrix& m);

struct JitterResult {
  SpdMatrix matrix;
  double epsilon = 0.0;  // shift that was needed
};

/// Returns m + eps * I with the smallest eps in {0, eps0, 10*eps0, ...}
/// making Cholesky succeed. Throws JitterBudgetExceeded after 8 escalations,
/// and DomainError if m is not symmetric.
JitterResult jitter_to_psd(const Eigen::MatrixXd& m, double eps0);

/// Convenience default for eps0: 1e-8 * trace / dim, floored away from zero
/// so that all-zero inputs still regularize.
double default_jitter_eps0(const Eigen::MatrixXd& m);

}  // namespace symphony
