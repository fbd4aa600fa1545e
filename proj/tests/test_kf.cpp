#include <doctest.h>

#include <cmath>
#include <vector>

#include "syncnet/errors.hpp"
#include "syncnet/kf.hpp"

using namespace syncnet;

namespace {

struct PairWorld {
    Topology topology;
    WorldInstance world;
};

// Parent (node 0) initiates; the KF-node (node 1) responds.
PairWorld make_pair(double theta_parent, double theta_kf, double noise_std) {
    PairWorld p;
    p.topology.node_count = 2;
    p.topology.edges = {{0, 1}};
    p.topology.roles = {NodeRole::bp, NodeRole::kf};
    p.topology.kf_parent = {-1, 0};
    p.world.clocks = {{1.0, theta_parent}, {1.0, theta_kf}};
    p.world.links = {{250.0, 0.0, noise_std, 0.0, noise_std}};
    return p;
}

void check_psd(const Mat2& p) {
    CHECK(p.is_symmetric());
    const double scale = std::max(std::abs(p.a00), std::abs(p.a11));
    CHECK(p.min_eigenvalue() >= -1e-9 * scale);
}

// Runs `rounds` filter steps and returns the offset estimate after each one.
std::vector<double> run_filter(const std::vector<TimestampQuad>& quads, const KfConfig& cfg,
                               std::vector<KfState>* states = nullptr) {
    KfState s = kf_initial_state(cfg);
    std::vector<double> est;
    for (std::size_t k = 0; k < quads.size(); ++k) {
        s = kf_step(s, quads[k], k == 0 ? nullptr : &quads[k - 1], cfg);
        est.push_back(s.x.offset);
        if (states) states->push_back(s);
    }
    return est;
}

}  // namespace

TEST_CASE("2x2 helpers") {
    const Mat2 m{4.0, 1.0, 2.0, 3.0};
    CHECK(m.determinant() == 10.0);
    CHECK(m.trace() == 7.0);
    const Mat2 prod = m * m.inverse();
    CHECK(prod.a00 == doctest::Approx(1.0));
    CHECK(std::abs(prod.a01) < 1e-15);
    CHECK(std::abs(prod.a10) < 1e-15);
    CHECK(prod.a11 == doctest::Approx(1.0));
    CHECK_THROWS_AS((Mat2{1.0, 2.0, 2.0, 4.0}).inverse(), EstimationError);
    // Eigenvalues of [[2, 1], [1, 2]] are 1 and 3.
    CHECK((Mat2{2.0, 1.0, 1.0, 2.0}).min_eigenvalue() == doctest::Approx(1.0));
}

TEST_CASE("measurement covariance") {
    KfConfig cfg;
    cfg.sigma2 = 32.0;
    cfg.delta_t = 1e6;
    const Mat2 r = kf_measurement_cov(cfg);
    CHECK(r.a00 == 32.0);
    CHECK(r.a01 == doctest::Approx(3.2e-5).epsilon(1e-14));
    CHECK(r.a10 == doctest::Approx(3.2e-5).epsilon(1e-14));
    CHECK(r.a11 == doctest::Approx(6.4e-11).epsilon(1e-14));

    for (double s2 : {0.5, 8.0, 32.0, 1000.0}) {
        for (double dt : {1e3, 1e6, 1e9}) {
            cfg.sigma2 = s2;
            cfg.delta_t = dt;
            const double det = kf_measurement_cov(cfg).determinant();
            CHECK(det == doctest::Approx(s2 * s2 / (dt * dt)).epsilon(1e-9));
            CHECK(det > 0.0);
        }
    }
}

TEST_CASE("configuration guards") {
    KfConfig cfg;
    cfg.validate();
    SUBCASE("zero variance") {
        cfg.sigma2 = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("zero interval") {
        cfg.delta_t = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("indefinite process noise") {
        cfg.q = Mat2{1.0, 2.0, 2.0, 1.0};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("prediction") {
    KfConfig cfg;
    cfg.delta_t = 1e6;
    KfState s;
    s.x = {10.0, 1e-5};
    CHECK(kf_predict(s, cfg).x.offset == doctest::Approx(20.0).epsilon(1e-15));
    CHECK(kf_predict(s, cfg).x.drift == 1e-5);

    s.x = {-7.5, 0.0};
    CHECK(kf_predict(s, cfg).x.offset == -7.5);

    // A P A^T for P = diag(p1, p2) expands to [[p1 + dT^2 p2, dT p2], [dT p2, p2]].
    const double p1 = 3.0, p2 = 2e-12;
    s.p = Mat2::diagonal(p1, p2);
    const Mat2 pp = kf_predict(s, cfg).p;
    CHECK(pp.a00 == doctest::Approx(p1 + 1e12 * p2).epsilon(1e-14));
    CHECK(pp.a01 == doctest::Approx(1e6 * p2).epsilon(1e-14));
    CHECK(pp.a10 == pp.a01);
    CHECK(pp.a11 == p2);

    cfg.q = Mat2::diagonal(0.5, 1e-15);
    const Mat2 pq = kf_predict(s, cfg).p;
    CHECK(pq.a00 == doctest::Approx(p1 + 1e12 * p2 + 0.5).epsilon(1e-14));
    CHECK(pq.a11 == doctest::Approx(p2 + 1e-15).epsilon(1e-14));
}

TEST_CASE("update limits") {
    KfConfig cfg;
    const Vec2 z{42.0, 3e-9};
    SUBCASE("diffuse prior takes the measurement") {
        KfState s;
        s.x = {-100.0, 1e-6};
        s.p = Mat2::diagonal(1e14, 1e-2);
        const KfState u = kf_update(s, z, cfg);
        CHECK(u.x.offset == doctest::Approx(42.0).epsilon(1e-9));
        CHECK(u.x.drift == doctest::Approx(3e-9).epsilon(1e-6));
    }
    SUBCASE("certain prior ignores the measurement") {
        KfState s;
        s.x = {-100.0, 1e-6};
        s.p = Mat2{};
        const KfState u = kf_update(s, z, cfg);
        CHECK(u.x.offset == -100.0);
        CHECK(u.x.drift == 1e-6);
    }
    SUBCASE("offset-only update matches the scalar formula") {
        KfState s;
        s.x = {5.0, 0.0};
        s.p = Mat2{100.0, 0.0, 0.0, 1e-6};
        const KfState u = kf_update_offset(s, 15.0, cfg);
        const double gain = 100.0 / (100.0 + cfg.sigma2);
        CHECK(u.x.offset == doctest::Approx(5.0 + gain * 10.0));
        CHECK(u.p.a00 == doctest::Approx((1.0 - gain) * 100.0));
        CHECK(u.p.a11 == 1e-6);
    }
}

TEST_CASE("noiseless quads are tracked exactly after the first update") {
    const auto p = make_pair(0.0, 30.0, 0.0);
    Rng rng(1);
    const auto quads = exchange_rounds(p.world, p.topology, 0, 1e9, 1e9, 20, rng, 1000.0);
    KfConfig cfg;
    cfg.sigma2 = 1e-9;
    const auto est = run_filter(quads, cfg);
    for (double e : est) CHECK(e == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("covariance shrinks and stays PSD") {
    const auto p = make_pair(0.0, 30.0, 4.0);
    Rng rng(9);
    const auto quads = exchange_rounds(p.world, p.topology, 0, 1e9, 1e9, 100, rng, 1000.0);
    KfConfig cfg;
    cfg.sigma2 = 32.0;
    std::vector<KfState> states;
    run_filter(quads, cfg, &states);
    for (const auto& s : states) check_psd(s.p);
    CHECK(states.back().round == 100);
    CHECK(states[99].p.trace() < states[9].p.trace());
}

TEST_CASE("offset RMSE with static truth") {
    const double truth = 30.0;
    const auto p = make_pair(0.0, truth, 4.0);
    KfConfig cfg;
    cfg.sigma2 = 32.0;
    const int trials = 1000, rounds = 100;
    std::vector<double> sq(rounds, 0.0);
    std::vector<double> single_shot;
    for (int t = 0; t < trials; ++t) {
        Rng rng(1000 + static_cast<std::uint64_t>(t));
        const auto quads = exchange_rounds(p.world, p.topology, 0, 1e9, 1e9, rounds, rng, 1000.0);
        const auto est = run_filter(quads, cfg);
        for (int k = 0; k < rounds; ++k) sq[static_cast<std::size_t>(k)] += (est[k] - truth) * (est[k] - truth);
        single_shot.push_back(measured_offset(quads[0]) - truth);
    }
    std::vector<double> rmse(rounds);
    for (int k = 0; k < rounds; ++k) rmse[static_cast<std::size_t>(k)] = std::sqrt(sq[static_cast<std::size_t>(k)] / trials);
    double ss = 0.0;
    for (double e : single_shot) ss += e * e;
    const double single_rmse = std::sqrt(ss / trials);

    CHECK(single_rmse == doctest::Approx(std::sqrt(8.0)).epsilon(0.08));
    CHECK(rmse.back() < 1.0);
    CHECK(rmse.back() < single_rmse);
    // Same trials at every round, so the curve is smooth enough for a 2% slack.
    for (int k = 5; k < rounds; ++k) {
        CHECK(rmse[static_cast<std::size_t>(k)] <= rmse[static_cast<std::size_t>(k - 1)] * 1.02);
    }
}

TEST_CASE("normalized innovations have unit variance under the filter's own model") {
    KfConfig cfg;
    cfg.sigma2 = 32.0;
    cfg.delta_t = 1e9;
    const Mat2 r = kf_measurement_cov(cfg);
    // Cholesky factor of R for drawing measurement noise.
    const double l00 = std::sqrt(r.a00);
    const double l10 = r.a10 / l00;
    const double l11 = std::sqrt(r.a11 - l10 * l10);

    Rng rng(4242);
    double nis = 0.0;
    int samples = 0;
    for (int t = 0; t < 200; ++t) {
        const Vec2 truth{rng.uniform(-50.0, 50.0), 0.0};
        KfState s = kf_initial_state(cfg);
        s.p = Mat2::diagonal(1e6, 1e-6);
        // Start from a measurement so the prior is informative, then test 50 steps.
        s = kf_update_offset(s, truth.offset + l00 * rng.gaussian(0.0, 1.0), cfg);
        for (int k = 0; k < 50; ++k) {
            const double n0 = rng.gaussian(0.0, 1.0);
            const double n1 = rng.gaussian(0.0, 1.0);
            const Vec2 z{truth.offset + l00 * n0, truth.drift + l10 * n0 + l11 * n1};
            const KfState pred = kf_predict(s, cfg);
            const Vec2 nu = z - pred.x;
            const Mat2 s_inv = (pred.p + r).inverse();
            const Vec2 w = s_inv * nu;
            nis += nu.offset * w.offset + nu.drift * w.drift;
            ++samples;
            s = kf_update(pred, z, cfg);
        }
    }
    CHECK(samples == 10000);
    CHECK(nis / (2.0 * samples) == doctest::Approx(1.0).epsilon(0.15));
}
