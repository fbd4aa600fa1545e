#ifndef SYNCNET_HYBRID_HPP
#define SYNCNET_HYBRID_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "syncnet/gbp.hpp"
#include "syncnet/kf.hpp"
#include "syncnet/model.hpp"
#include "syncnet/ptp.hpp"

namespace syncnet {

struct DomainPartition {
    std::vector<int> bp_set;
    std::vector<int> kf_set;
};

/// Label-based split of the nodes; validates the topology first.
DomainPartition partition_domains(const Topology& topology);

/// Interleaving of the two domains on the reference timeline. KF rounds run
/// every delta_t; one BP iteration costs K rounds of time-stamp collection
/// plus one delta_t for the message hop, so K + 1 KF rounds elapse per BP
/// iteration.
struct HybridSchedule {
    int kf_rounds_per_bp_iteration = 0;
    std::vector<int> bp_set;
    std::vector<int> kf_set;
};

HybridSchedule make_schedule(const Scenario& scenario, const DomainPartition& partition);

/// Seed material for the random streams of one trial.
struct TrialSeed {
    std::uint64_t seed = 0;
    int trial = 0;
};

/// Per-trial output of Algorithm-1 style synchronization. Iteration rows are
/// indexed 0 .. bp_max_iters - 1 (iteration l + 1). After BP converges the
/// last beliefs are carried forward while KF-nodes keep filtering.
struct HybridTrace {
    std::vector<double> true_offset;          // per node
    std::vector<std::vector<double>> estimate;  // [iteration][node], absolute offset estimate
    std::vector<std::vector<GaussianBelief>> beliefs;  // [iteration][node]; KF-nodes non-informative
    int converged_iteration = 0;                 // first l with change <= epsilon, 0 if never
    std::vector<double> max_change;              // per executed BP iteration

    // KF-node bookkeeping, [iteration][node]; zero for BP-nodes.
    std::vector<std::vector<double>> parent_error;
    std::vector<std::vector<double>> kf_error;
    // Per KF-node relative-offset estimate after every exchange round.
    std::vector<std::vector<double>> kf_round_estimate;  // [node][round]
    std::vector<std::vector<double>> kf_round_truth;     // [node][round]

    std::vector<double> sigma2_hat;                        // per edge, after the variance floor
    std::vector<std::optional<PairStats>> pair_stats;      // per edge (BP edges only)
    std::vector<std::vector<TimestampQuad>> sync_quads;    // per edge: BP set or KF rounds

    double error(int iteration, int node) const;
};

/// Training results below this are floored so that noiseless links still
/// produce finite factor precisions and a non-singular KF covariance.
inline constexpr double kMinSigma2 = 1e-9;

/// Runs training on every edge, the K-round set plus loopy BP on the BP-nodes,
/// and the pairwise KF on every KF-node against its parent. A KF-node's
/// absolute estimate is its parent's BP estimate plus its filtered offset
/// relative to the parent, so its error is parent error + KF error.
HybridTrace run_hybrid(const WorldInstance& world, const Scenario& scenario, const Topology& topology,
                       TrialSeed seed);

}  // namespace syncnet

#endif  // SYNCNET_HYBRID_HPP
