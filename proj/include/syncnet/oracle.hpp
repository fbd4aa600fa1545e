#ifndef SYNCNET_ORACLE_HPP
#define SYNCNET_ORACLE_HPP

#include <span>
#include <vector>

#include "syncnet/gbp.hpp"

namespace syncnet {

// Reference inference used to check the message-passing estimators. Nothing
// here calls into the BP message code.

/// Exact posterior marginals of a Gaussian factor graph, indexed like
/// `graph.variables`. Anchored variables report their anchor with variance 0.
struct ExactMarginals {
    std::vector<double> mean;
    std::vector<double> variance;
};

/// Assembles the joint precision over the non-anchored variables from the
/// priors and the pairwise constraints, then solves it densely. Throws
/// EstimationError when the precision is singular (a component without an
/// anchor or proper prior).
ExactMarginals exact_network_marginals(const FactorGraph& graph);

struct GridOptions {
    double half_width_std = 6.0;
    int points = 4001;
};

struct PosteriorMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Posterior mean and variance of theta_i given one link's round statistics
/// C^k (see round_statistic), by quadrature of
///   p(theta_i) * integral p(c | theta_i, theta_j) p(theta_j) dtheta_j
/// where the likelihood is prod_k N(C^k + 2 (theta_j - alpha theta_i); 0, alpha^2 sigma2).
/// At least one prior must be proper (an anchor counts). Throws
/// EstimationError when the grid does not hold +-6 std of posterior mass.
PosteriorMoments grid_pair_posterior(std::span<const double> round_stats, const GaussianMsg& prior_i,
                                     const GaussianMsg& prior_j, double alpha, double sigma2,
                                     const GridOptions& options = {});

}  // namespace syncnet

#endif  // SYNCNET_ORACLE_HPP
