#pragma once

#include <Eigen/Dense>

#include "symphony/rng.hpp"
#include "symphony/spd.hpp"

namespace symphony {

/// Wishart(scale, dof) draw via the Bartlett decomposition: chi-square
/// diagonals, standard-normal off-diagonals, wrapped in the scale factor.
/// Requires dof >= dim (DofTooSmall otherwise). Draws are SPD by
/// construction (Gram form).
SpdMatrix sample_wishart_bartlett(const SpdMatrix& scale, double dof, RngStream& rng);

/// Coordinatewise truncated normal on [lo, inf) with diagonal covariance.
/// Rejection sampling per coordinate, switching to the inverse-CDF route on
/// low acceptance, so the loop never stalls.
Eigen::VectorXd sample_trunc_normal(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                    const Eigen::Ref<const Eigen::VectorXd>& var_diag,
                                    double lo, RngStream& rng);

/// Single truncated-normal coordinate; exposed for tests.
double sample_trunc_normal_scalar(double mean, double sd, double lo, RngStream& rng);

/// Multivariate normal draw mean + L*z with L the Cholesky factor of cov.
Eigen::VectorXd sample_mvn(const Eigen::Ref<const Eigen::VectorXd>& mean,
                           const SpdMatrix& cov, RngStream& rng);

}  // namespace symphony
