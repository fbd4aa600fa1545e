#include "syncnet/ptp.hpp"

#include <cmath>
#include <string>

#include "syncnet/errors.hpp"

namespace syncnet {

TimestampQuad exchange_round(const WorldInstance& world, const Topology& topology, std::size_t edge,
                             double t_send_ref, Rng& rng, double turnaround_ns, int round_index) {
    const Edge& e = topology.edges.at(edge);
    const LinkModel& link = world.links.at(edge);
    const ClockState& initiator = world.clocks.at(static_cast<std::size_t>(e.a));
    const ClockState& responder = world.clocks.at(static_cast<std::size_t>(e.b));

    const double forward = rng.gaussian(link.t_mean, link.t_std);
    const double reverse = rng.gaussian(link.r_mean, link.r_std);

    const double t1 = t_send_ref;
    const double t2 = t1 + link.prop_delay + forward;
    const double t3 = t2 + turnaround_ns;
    const double t4 = t3 + link.prop_delay + reverse;

    TimestampQuad q;
    q.c1 = clock_read(initiator, t1);
    q.c2 = clock_read(responder, t2);
    q.c3 = clock_read(responder, t3);
    q.c4 = clock_read(initiator, t4);
    q.round_index = round_index;
    return q;
}

std::vector<TimestampQuad> exchange_rounds(const WorldInstance& world, const Topology& topology,
                                           std::size_t edge, double t_start, double delta_t, int count,
                                           Rng& rng, double turnaround_ns, int first_round) {
    std::vector<TimestampQuad> out;
    out.reserve(static_cast<std::size_t>(count > 0 ? count : 0));
    for (int n = 0; n < count; ++n) {
        out.push_back(exchange_round(world, topology, edge, t_start + n * delta_t, rng, turnaround_ns,
                                     first_round + n));
    }
    return out;
}

double measured_offset(const TimestampQuad& q) {
    return 0.5 * ((q.c2 + q.c3) - (q.c1 + q.c4));
}

double measured_drift(const TimestampQuad& q_k, const TimestampQuad& q_prev) {
    const double sender_interval = q_k.c1 - q_prev.c1;
    if (sender_interval == 0.0) throw EstimationError("measured_drift: identical c1 time-stamps");
    return ((q_k.c2 - q_prev.c2) - sender_interval) / sender_interval;
}

double estimate_rel_skew(std::span<const TimestampQuad> rounds) {
    if (rounds.size() < 2) throw EstimationError("estimate_rel_skew needs at least two rounds");
    double sum = 0.0;
    for (std::size_t k = 1; k < rounds.size(); ++k) sum += measured_drift(rounds[k], rounds[k - 1]);
    const double mean_drift = sum / static_cast<double>(rounds.size() - 1);
    return 1.0 / (1.0 + mean_drift);
}

double round_statistic(const TimestampQuad& q, double alpha) {
    return alpha * (q.c2 + q.c3) - (q.c1 + q.c4);
}

double training_variance(std::span<const TimestampQuad> rounds) {
    if (rounds.size() < 2) throw EstimationError("training needs at least two rounds");
    const double alpha = estimate_rel_skew(rounds);
    // Two-pass variance; the observations sit around 2d (hundreds of ns).
    std::vector<double> obs;
    obs.reserve(rounds.size());
    double mean = 0.0;
    for (const auto& q : rounds) {
        obs.push_back(alpha * (q.c2 - q.c3) - (q.c1 - q.c4));
        mean += obs.back();
    }
    mean /= static_cast<double>(obs.size());
    double ss = 0.0;
    for (double x : obs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(obs.size() - 1);
}

double run_training(const WorldInstance& world, const Topology& topology, std::size_t edge, int n_rounds,
                    Rng& rng, double t_start, double delta_t, double turnaround_ns) {
    if (n_rounds < 30) throw ConfigError("training needs at least 30 rounds, got " + std::to_string(n_rounds));
    const auto rounds = exchange_rounds(world, topology, edge, t_start, delta_t, n_rounds, rng, turnaround_ns);
    return training_variance(rounds);
}

PairStats pair_statistic(std::span<const TimestampQuad> rounds, double alpha_hat, double sigma2_hat) {
    if (rounds.empty()) throw EstimationError("pair_statistic needs at least one round");
    if (!(sigma2_hat > 0.0)) throw EstimationError("pair_statistic: sigma2_hat must be positive (run training first)");
    if (!(alpha_hat > 0.0)) throw EstimationError("pair_statistic: alpha_hat must be positive");

    const auto k = static_cast<double>(rounds.size());
    double sum = 0.0;
    for (const auto& q : rounds) sum += round_statistic(q, alpha_hat);

    PairStats s;
    s.alpha_hat = alpha_hat;
    s.sigma2_hat = sigma2_hat;
    // Summing the forward and reverse relations gives C^k = -2 (theta_j - alpha theta_i) + Z_k.
    s.delta_hat = -sum / (2.0 * k);
    s.k_used = static_cast<int>(rounds.size());
    s.factor_var = alpha_hat * alpha_hat * sigma2_hat / (4.0 * k);
    return s;
}

}  // namespace syncnet
