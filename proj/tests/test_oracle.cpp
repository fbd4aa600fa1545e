#include <doctest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "syncnet/errors.hpp"
#include "syncnet/oracle.hpp"

using namespace syncnet;
using syncnet::testing::rel_close;

namespace {

PairStats stats(double alpha, double delta, double fv) {
    PairStats s;
    s.alpha_hat = alpha;
    s.delta_hat = delta;
    s.factor_var = fv;
    s.k_used = 10;
    s.sigma2_hat = 40.0 * fv / (alpha * alpha);
    return s;
}

// Closed-form posterior of theta_i: its prior times the factor message built
// from theta_j's prior.
PosteriorMoments closed_form(const std::vector<double>& c, const GaussianMsg& prior_i, const GaussianMsg& prior_j,
                             double alpha, double sigma2) {
    double mean_c = 0.0;
    for (double x : c) mean_c += x;
    mean_c /= static_cast<double>(c.size());
    const Factor f{0, 1, stats(alpha, -0.5 * mean_c, alpha * alpha * sigma2 / (4.0 * static_cast<double>(c.size())))};
    const GaussianMsg terms[] = {prior_i, msg_factor_to_var(f, FactorSide::i, prior_j)};
    const GaussianMsg post = gaussian_product(terms);
    return {post.mean, post.variance()};
}

}  // namespace

TEST_CASE("exact marginals on small graphs") {
    SUBCASE("two-node chain") {
        FactorGraph g;
        g.add_variable(0, GaussianMsg::anchored(0.0));
        g.add_variable(1, GaussianMsg::non_informative());
        g.add_factor(0, 1, stats(1.0, 30.0, 0.8));
        const ExactMarginals m = exact_network_marginals(g);
        CHECK(m.mean[0] == 0.0);
        CHECK(m.variance[0] == 0.0);
        CHECK(m.mean[1] == doctest::Approx(30.0).epsilon(1e-14));
        CHECK(m.variance[1] == doctest::Approx(0.8).epsilon(1e-14));
    }
    SUBCASE("responder side of the chain") {
        // theta_gm - alpha * theta_a = delta, so theta_a = -delta / alpha.
        FactorGraph g;
        g.add_variable(0, GaussianMsg::anchored(0.0));
        g.add_variable(1, GaussianMsg::non_informative());
        g.add_factor(1, 0, stats(1.25, 30.0, 0.8));
        const ExactMarginals m = exact_network_marginals(g);
        CHECK(m.mean[1] == doctest::Approx(-24.0).epsilon(1e-14));
        CHECK(m.variance[1] == doctest::Approx(0.8 / (1.25 * 1.25)).epsilon(1e-14));
    }
    SUBCASE("two parallel paths halve the variance") {
        FactorGraph g;
        g.add_variable(0, GaussianMsg::anchored(0.0));
        g.add_variable(1, GaussianMsg::non_informative());
        g.add_factor(0, 1, stats(1.0, 30.0, 2.0));
        g.add_factor(0, 1, stats(1.0, 34.0, 2.0));
        const ExactMarginals m = exact_network_marginals(g);
        CHECK(m.mean[1] == doctest::Approx(32.0).epsilon(1e-14));
        CHECK(m.variance[1] == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("variable cut off from the anchor") {
        FactorGraph g;
        g.add_variable(0, GaussianMsg::anchored(0.0));
        g.add_variable(1, GaussianMsg::non_informative());
        g.add_variable(2, GaussianMsg::non_informative());
        g.add_factor(1, 0, stats(1.0, 30.0, 0.8));
        CHECK_THROWS_AS(exact_network_marginals(g), EstimationError);
    }
    SUBCASE("proper prior without anchor is solvable") {
        FactorGraph g;
        g.add_variable(0, GaussianMsg::from_variance(10.0, 4.0));
        g.add_variable(1, GaussianMsg::non_informative());
        g.add_factor(1, 0, stats(1.0, 5.0, 1.0));
        const ExactMarginals m = exact_network_marginals(g);
        CHECK(m.mean[0] == doctest::Approx(10.0));
        CHECK(m.mean[1] == doctest::Approx(5.0));
        CHECK(m.variance[1] == doctest::Approx(5.0));
    }
}

TEST_CASE("exact marginals on random networks are well formed") {
    Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const Topology t = syncnet::testing::random_tree(3 + static_cast<int>(rng.uniform01() * 13), rng);
        const FactorGraph g = build_factor_graph(t, syncnet::testing::random_stats(t, rng));
        const ExactMarginals m = exact_network_marginals(g);
        REQUIRE(m.mean.size() == g.variables.size());
        for (std::size_t v = 0; v < g.variables.size(); ++v) {
            if (g.variables[v].node == t.gm) {
                CHECK(m.variance[v] == 0.0);
                CHECK(m.mean[v] == 0.0);
            } else {
                CHECK(m.variance[v] > 0.0);
                CHECK(std::isfinite(m.mean[v]));
            }
        }
    }
}

TEST_CASE("grid posterior") {
    SUBCASE("anchored responder partner, noiseless stamps") {
        // theta_j = 0, theta_i = -30: each C^k = 2 (theta_i - theta_j) = -60.
        const std::vector<double> c(10, -60.0);
        const PosteriorMoments p =
            grid_pair_posterior(c, GaussianMsg::non_informative(), GaussianMsg::anchored(0.0), 1.0, 32.0);
        CHECK(p.mean == doctest::Approx(-30.0).epsilon(1e-9));
        CHECK(p.variance == doctest::Approx(0.8).epsilon(1e-6));
    }
    SUBCASE("symmetric priors and zero statistic") {
        const std::vector<double> c{-3.0, 3.0, 1.0, -1.0};
        const GaussianMsg prior = GaussianMsg::from_variance(0.0, 25.0);
        const PosteriorMoments p = grid_pair_posterior(c, prior, prior, 1.0, 32.0);
        CHECK(std::abs(p.mean) < 1e-9);
    }
    SUBCASE("non-informative partner leaves the prior") {
        const std::vector<double> c{4.0, 6.0};
        const PosteriorMoments p =
            grid_pair_posterior(c, GaussianMsg::from_variance(7.0, 9.0), GaussianMsg::non_informative(), 1.0, 32.0);
        CHECK(p.mean == doctest::Approx(7.0).epsilon(1e-9));
        CHECK(p.variance == doctest::Approx(9.0).epsilon(1e-6));
    }
    SUBCASE("agrees with the closed-form message pipeline") {
        Rng rng(404);
        for (int rep = 0; rep < 10; ++rep) {
            const double alpha = 1.0 + 1e-5 * rng.uniform(-20.0, 20.0);
            const double sigma2 = rng.uniform(8.0, 64.0);
            std::vector<double> c;
            const double shift = rng.uniform(-100.0, 100.0);
            for (int k = 0; k < 10; ++k) c.push_back(shift + rng.gaussian(0.0, std::sqrt(sigma2)));
            const GaussianMsg pi = GaussianMsg::from_variance(rng.uniform(-50.0, 50.0), rng.uniform(1.0, 100.0));
            const GaussianMsg pj = GaussianMsg::from_variance(rng.uniform(-50.0, 50.0), rng.uniform(0.5, 50.0));
            const PosteriorMoments grid = grid_pair_posterior(c, pi, pj, alpha, sigma2);
            const PosteriorMoments exact = closed_form(c, pi, pj, alpha, sigma2);
            CHECK(rel_close(grid.mean, exact.mean, 1e-6));
            CHECK(rel_close(grid.variance, exact.variance, 1e-6));
        }
    }
    SUBCASE("errors") {
        const std::vector<double> c{1.0, 2.0};
        CHECK_THROWS_AS(grid_pair_posterior(c, GaussianMsg::non_informative(), GaussianMsg::non_informative(), 1.0,
                                            32.0),
                        EstimationError);
        CHECK_THROWS_AS(grid_pair_posterior({}, GaussianMsg::anchored(0.0), GaussianMsg::non_informative(), 1.0, 32.0),
                        EstimationError);
        GridOptions narrow;
        narrow.half_width_std = 2.0;
        CHECK_THROWS_AS(grid_pair_posterior(c, GaussianMsg::from_variance(0.0, 4.0),
                                            GaussianMsg::from_variance(0.0, 4.0), 1.0, 32.0, narrow),
                        EstimationError);
    }
}
