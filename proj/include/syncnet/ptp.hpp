#ifndef SYNCNET_PTP_HPP
#define SYNCNET_PTP_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "syncnet/model.hpp"
#include "syncnet/rng.hpp"

namespace syncnet {

/// One two-way exchange on a link. The initiator j stamps c1 (send) and c4
/// (reply arrival) on its clock; the responder i stamps c2 (arrival) and c3
/// (reply send) on its own clock.
struct TimestampQuad {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    int round_index = 0;
};

/// Sufficient statistic of one K-round set on a link, oriented so that
/// delta_hat estimates theta_initiator - alpha_hat * theta_responder.
struct PairStats {
    double alpha_hat = 1.0;
    double sigma2_hat = 0.0;
    double delta_hat = 0.0;
    int k_used = 0;
    double factor_var = 0.0;  // alpha_hat^2 * sigma2_hat / (4K)
};

/// Simulates one exchange on `topology.edges[edge]` (a = initiator,
/// b = responder) starting at reference time t_send. Stack delays are drawn
/// T ~ N(t_mean, t_std^2) then R ~ N(r_mean, r_std^2) from `rng`.
TimestampQuad exchange_round(const WorldInstance& world, const Topology& topology, std::size_t edge,
                             double t_send_ref, Rng& rng, double turnaround_ns, int round_index = 0);

/// `count` consecutive rounds at t_start + n * delta_t, with round indices
/// first_round .. first_round + count - 1.
std::vector<TimestampQuad> exchange_rounds(const WorldInstance& world, const Topology& topology,
                                           std::size_t edge, double t_start, double delta_t, int count,
                                           Rng& rng, double turnaround_ns, int first_round = 0);

/// 0.5 * [(c2 + c3) - (c1 + c4)], i.e. theta_responder - theta_initiator plus noise.
double measured_offset(const TimestampQuad& q);

/// Relative drift between consecutive rounds:
/// [(c2 - c2') - (c1 - c1')] / (c1 - c1'). Throws on a zero c1 interval.
double measured_drift(const TimestampQuad& q_k, const TimestampQuad& q_prev);

/// Relative skew alpha = gamma_initiator / gamma_responder of one set.
///
/// The mean drift over consecutive round pairs estimates the responder/initiator
/// rate ratio minus one, so alpha is returned as 1 / (1 + mean drift). Needs at
/// least two rounds.
double estimate_rel_skew(std::span<const TimestampQuad> rounds);

/// Per-round statistic C^k = alpha (c2 + c3) - (c1 + c4).
double round_statistic(const TimestampQuad& q, double alpha);

/// Sample variance (n - 1 denominator) of alpha_hat (c2 - c3) - (c1 - c4) over
/// the given rounds, with alpha_hat estimated from those same rounds. The
/// quantity observes 2d + T + R, so the result targets sigma_T^2 + sigma_R^2.
double training_variance(std::span<const TimestampQuad> rounds);

/// Runs a training phase of n_rounds (>= 30) exchanges and returns sigma2_hat.
double run_training(const WorldInstance& world, const Topology& topology, std::size_t edge, int n_rounds,
                    Rng& rng, double t_start, double delta_t, double turnaround_ns);

/// Builds PairStats from K >= 1 rounds. Throws EstimationError when
/// sigma2_hat <= 0 or alpha_hat <= 0.
PairStats pair_statistic(std::span<const TimestampQuad> rounds, double alpha_hat, double sigma2_hat);

}  // namespace syncnet

#endif  // SYNCNET_PTP_HPP
