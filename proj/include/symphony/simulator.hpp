#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "symphony/model.hpp"
#include "symphony/rng.hpp"
#include "symphony/types.hpp"

namespace symphony {

/// Recipe for drawing a random RegulatoryPrior when no mapping file is
/// supplied: each (target, regulator) pair carries a motif with probability
/// motif_density; mapped pairs get regions round-robin over 1..l; signs are
/// symmetric +/-1 (zeroed with probability 1 - sign_density).
struct RandomPriorRecipe {
  double motif_density = 0.3;
  double sign_density = 1.0;
};

struct SimConfig {
  Dims dims{100, 10, 50, 3, 3};
  HyperParams hp;  // defaulted from dims in make_default
  std::optional<RegulatoryPrior> prior;  // explicit prior wins over the recipe
  RandomPriorRecipe recipe;
  bool noise_free_bulk = false;
  std::uint64_t seed = 12345;

  static SimConfig make_default();
};

/// A sampled truth: the full latent assignment plus the paired dataset it
/// generated, and the prior actually used.
struct GroundTruth {
  LatentState state;
  Dataset dataset;
  RegulatoryPrior prior;
  HyperParams hp;
  Dims dims;
  std::uint64_t seed = 0;
};

/// Forward-samples the whole generative process in topological order.
/// Pure function of the config: same seed, same GroundTruth.
GroundTruth simulate(const SimConfig& cfg);

/// Mixes externally supplied per-cluster profiles into synthetic bulk:
/// r draws of N(sum_k pi_k p_hat_k, zeta I). zeta = 0 gives the exact
/// weighted sum.
Eigen::MatrixXd simulate_bulk_from_sorted(const Eigen::Ref<const Eigen::MatrixXd>& p_hat,
                                          const Eigen::Ref<const Eigen::VectorXd>& pi,
                                          double zeta, int r, RngStream& rng);

/// Draws K=3 covariances from one shared sign/motif structure but different
/// peak profiles, demonstrating covariance sign flips across clusters.
struct CovarianceSignDemo {
  std::vector<SpdMatrix> Sigma;   // K matrices
  Eigen::MatrixXd p;              // K x l profiles used
  bool sign_flip_found = false;   // some off-diagonal entry flips sign
};

CovarianceSignDemo covariance_sign_variability_demo(std::uint64_t seed,
                                                    bool shared_profiles = false,
                                                    double gamma_override = 0.0);

/// Random regulatory prior used by the simulator (exposed for tests/CLI).
RegulatoryPrior make_random_prior(const Dims& dims, const RandomPriorRecipe& recipe,
                                  RngStream& rng);

}  // namespace symphony
